#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsec/analysis/enrichment.hpp"

namespace dsec::cohort {

/// Vital signs and laboratory measures, in column order.
std::vector<std::string> default_feature_names();

/// One hospital admission. `readings` keeps every observed value of each
/// measurement; a measurement with no readings is missing.
struct AdmissionRecord {
    std::string patient_id;
    std::string admission_id;
    std::string timestamp;  // ISO-8601, compared lexicographically
    double age = 0.0;
    int sex = 0;
    int label = 0;  // 1 = heart failure
    std::map<std::string, std::vector<double>> readings;
    analysis::CodeSet codes;

    /// Mean of the readings of `name`, or nullopt when none were taken.
    std::optional<double> mean(const std::string& name) const;
    std::size_t present_count(std::span<const std::string> features) const;
    bool has_heart_failure_code() const;

    friend bool operator==(const AdmissionRecord&, const AdmissionRecord&) = default;
};

/// Columns expected in an admissions CSV besides the fixed ones
/// (patient_id, admission_id, timestamp, age, sex, label, codes).
struct AdmissionSchema {
    std::vector<std::string> measurements = default_feature_names();
};

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct AdmissionLoad {
    std::vector<AdmissionRecord> records;  // in order of first appearance
    std::vector<RowError> errors;
};

/// Parses an admissions CSV with one row per admission. A measurement cell
/// holds zero or more readings separated by ';' (empty = missing); the codes
/// cell is ';'-separated as well. Malformed rows, duplicate
/// (patient_id, admission_id) keys and patients whose age/sex/label disagree
/// across rows land in `errors`. Throws FormatError when a mandatory column is
/// missing.
AdmissionLoad load_admissions(std::istream& in, const AdmissionSchema& schema = {});
AdmissionLoad load_admissions(const std::filesystem::path& path, const AdmissionSchema& schema = {});

void write_admissions(std::ostream& out, std::span<const AdmissionRecord> records, const AdmissionSchema& schema = {});

/// Per patient: heart-failure patients keep their earliest admission with an
/// I50* code, controls the admission with the most measurements present (ties
/// to the earliest timestamp). The selected record's readings are replaced by
/// their means and its codes by the union over all of the patient's
/// admissions. Patients are returned in order of first appearance.
std::vector<AdmissionRecord> aggregate_and_select(std::span<const AdmissionRecord> records,
                                                  std::span<const std::string> features);

} // namespace dsec::cohort
