#include "dsec/cohort/admissions.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <regex>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>

#include "dsec/cohort/csv.hpp"
#include "dsec/error.hpp"

namespace dsec::cohort {

std::vector<std::string> default_feature_names() {
    return {"systolic_bp", "diastolic_bp", "heart_rate", "spo2",      "temperature", "alt",  "creatinine",
            "crp",         "platelets",    "potassium",  "sodium",    "urea",        "wbc"};
}

std::optional<double> AdmissionRecord::mean(const std::string& name) const {
    const auto it = readings.find(name);
    if (it == readings.end() || it->second.empty()) return std::nullopt;
    const double total = std::accumulate(it->second.begin(), it->second.end(), 0.0);
    return total / static_cast<double>(it->second.size());
}

std::size_t AdmissionRecord::present_count(std::span<const std::string> features) const {
    std::size_t count = 0;
    for (const auto& f : features) {
        const auto it = readings.find(f);
        if (it != readings.end() && !it->second.empty()) ++count;
    }
    return count;
}

bool AdmissionRecord::has_heart_failure_code() const {
    return std::any_of(codes.begin(), codes.end(), [](const std::string& c) { return c.rfind("I50", 0) == 0; });
}

namespace {

const std::vector<std::string> kFixedColumns = {"patient_id", "admission_id", "timestamp", "age",
                                                "sex",        "label",        "codes"};

std::vector<std::string> split_list(std::string_view cell) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= cell.size()) {
        const std::size_t end = std::min(cell.find(';', start), cell.size());
        std::string item(cell.substr(start, end - start));
        item.erase(0, item.find_first_not_of(' '));
        item.erase(item.find_last_not_of(' ') + 1);
        if (!item.empty()) out.push_back(std::move(item));
        start = end + 1;
    }
    return out;
}

bool valid_timestamp(const std::string& ts) {
    static const std::regex iso(R"(\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?)");
    return std::regex_match(ts, iso);
}

} // namespace

AdmissionLoad load_admissions(std::istream& in, const AdmissionSchema& schema) {
    CsvReader reader(in);
    AdmissionLoad result;
    const auto header = reader.next();
    if (!header) throw FormatError("admissions: missing header row");

    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header->size(); ++i) column[(*header)[i]] = i;
    std::vector<std::string> missing;
    for (const auto& name : kFixedColumns)
        if (!column.contains(name)) missing.push_back(name);
    for (const auto& name : schema.measurements)
        if (!column.contains(name)) missing.push_back(name);
    if (!missing.empty()) {
        throw FormatError(fmt::format("admissions: missing mandatory columns: {}", fmt::join(missing, ", ")));
    }

    std::set<std::pair<std::string, std::string>> seen;
    struct Demographics {
        double age;
        int sex;
        int label;
    };
    std::unordered_map<std::string, Demographics> patients;

    while (auto row = reader.next()) {
        const std::size_t line = reader.line();
        auto fail = [&](std::string message) { result.errors.push_back({line, std::move(message)}); };
        if (row->size() != header->size()) {
            fail(fmt::format("expected {} fields, found {}", header->size(), row->size()));
            continue;
        }
        auto field = [&](const std::string& name) -> const std::string& { return (*row)[column.at(name)]; };

        AdmissionRecord rec;
        rec.patient_id = field("patient_id");
        rec.admission_id = field("admission_id");
        rec.timestamp = field("timestamp");
        if (rec.patient_id.empty() || rec.admission_id.empty()) {
            fail("empty patient_id or admission_id");
            continue;
        }
        if (!valid_timestamp(rec.timestamp)) {
            fail(fmt::format("timestamp '{}' is not ISO-8601", rec.timestamp));
            continue;
        }
        const auto age = parse_double(field("age"));
        if (!age || *age < 0.0) {
            fail(fmt::format("age '{}' is not a non-negative number", field("age")));
            continue;
        }
        rec.age = *age;
        const auto& sex = field("sex");
        const auto& label = field("label");
        if (sex != "0" && sex != "1") {
            fail(fmt::format("sex '{}' must be 0 or 1", sex));
            continue;
        }
        if (label != "0" && label != "1") {
            fail(fmt::format("label '{}' must be 0 or 1", label));
            continue;
        }
        rec.sex = sex == "1";
        rec.label = label == "1";

        bool ok = true;
        for (const auto& name : schema.measurements) {
            std::vector<double> values;
            for (const auto& token : split_list(field(name))) {
                const auto v = parse_double(token);
                if (!v) {
                    fail(fmt::format("{} value '{}' is not numeric", name, token));
                    ok = false;
                    break;
                }
                values.push_back(*v);
            }
            if (!ok) break;
            if (!values.empty()) rec.readings[name] = std::move(values);
        }
        if (!ok) continue;
        rec.codes = analysis::make_code_set(split_list(field("codes")));

        if (!seen.insert({rec.patient_id, rec.admission_id}).second) {
            fail(fmt::format("duplicate admission ({}, {})", rec.patient_id, rec.admission_id));
            continue;
        }
        const auto [it, inserted] = patients.try_emplace(rec.patient_id, Demographics{rec.age, rec.sex, rec.label});
        if (!inserted && (it->second.sex != rec.sex || it->second.label != rec.label)) {
            fail(fmt::format("patient {} has conflicting sex or label across admissions", rec.patient_id));
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

AdmissionLoad load_admissions(const std::filesystem::path& path, const AdmissionSchema& schema) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open admissions file '{}'", path.string()));
    return load_admissions(in, schema);
}

void write_admissions(std::ostream& out, std::span<const AdmissionRecord> records, const AdmissionSchema& schema) {
    out << "patient_id,admission_id,timestamp,age,sex,label";
    for (const auto& name : schema.measurements) out << ',' << csv_escape(name);
    out << ",codes\n";
    for (const auto& rec : records) {
        out << csv_escape(rec.patient_id) << ',' << csv_escape(rec.admission_id) << ',' << rec.timestamp << ','
            << format_double(rec.age) << ',' << rec.sex << ',' << rec.label;
        for (const auto& name : schema.measurements) {
            out << ',';
            const auto it = rec.readings.find(name);
            if (it == rec.readings.end()) continue;
            for (std::size_t i = 0; i < it->second.size(); ++i) {
                if (i) out << ';';
                out << format_double(it->second[i]);
            }
        }
        out << ',' << csv_escape(fmt::format("{}", fmt::join(rec.codes, ";"))) << '\n';
    }
}

std::vector<AdmissionRecord> aggregate_and_select(std::span<const AdmissionRecord> records,
                                                  std::span<const std::string> features) {
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<const AdmissionRecord*>> by_patient;
    for (const auto& rec : records) {
        auto& list = by_patient[rec.patient_id];
        if (list.empty()) order.push_back(rec.patient_id);
        list.push_back(&rec);
    }

    std::vector<AdmissionRecord> selected;
    selected.reserve(order.size());
    for (const auto& pid : order) {
        auto admissions = by_patient[pid];
        std::stable_sort(admissions.begin(), admissions.end(),
                         [](const AdmissionRecord* a, const AdmissionRecord* b) { return a->timestamp < b->timestamp; });
        const AdmissionRecord* chosen = nullptr;
        if (admissions.front()->label == 1) {
            for (const auto* a : admissions) {
                if (a->has_heart_failure_code()) {
                    chosen = a;
                    break;
                }
            }
            if (!chosen) {
                throw DomainError(fmt::format("patient {} is labeled heart failure but has no I50* admission", pid));
            }
        } else {
            std::size_t best = 0;
            for (const auto* a : admissions) {
                const std::size_t present = a->present_count(features);
                if (!chosen || present > best) {
                    chosen = a;
                    best = present;
                }
            }
        }

        AdmissionRecord out = *chosen;
        out.readings.clear();
        for (const auto& name : features) {
            if (const auto m = chosen->mean(name)) out.readings[name] = {*m};
        }
        std::vector<std::string> all_codes;
        for (const auto* a : admissions) all_codes.insert(all_codes.end(), a->codes.begin(), a->codes.end());
        out.codes = analysis::make_code_set(std::move(all_codes));
        selected.push_back(std::move(out));
    }
    return selected;
}

} // namespace dsec::cohort
