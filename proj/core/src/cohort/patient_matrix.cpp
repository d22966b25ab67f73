#include "dsec/cohort/patient_matrix.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dsec/cohort/csv.hpp"
#include "dsec/error.hpp"

namespace dsec::cohort {

void PatientMatrix::validate() const {
    const std::size_t n = rows();
    if (mask.size() != features.size() || patient_ids.size() != n || labels.size() != n || codes.size() != n ||
        age.size() != n || sex.size() != n || subgroup.size() != n || feature_names.size() != cols()) {
        throw ShapeError(fmt::format("patient matrix: inconsistent sizes for {} patients x {} features", n, cols()));
    }
}

PatientMatrix build_patient_matrix(std::span<const AdmissionRecord> selected, std::span<const std::string> features) {
    PatientMatrix m;
    m.feature_names.assign(features.begin(), features.end());
    m.features = Matrix(selected.size(), features.size());
    m.mask.assign(m.features.size(), 0);
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const auto& rec = selected[i];
        m.patient_ids.push_back(rec.patient_id);
        m.labels.push_back(rec.label);
        m.codes.push_back(rec.codes);
        m.age.push_back(rec.age);
        m.sex.push_back(rec.sex);
        m.subgroup.push_back(-1);
        for (std::size_t j = 0; j < features.size(); ++j) {
            if (const auto v = rec.mean(features[j])) {
                m.features(i, j) = *v;
                m.mask[i * features.size() + j] = 1;
            }
        }
    }
    return m;
}

PatientMatrix subset_rows(const PatientMatrix& m, std::span<const std::size_t> rows) {
    PatientMatrix out;
    out.feature_names = m.feature_names;
    out.features = select_rows(m.features, rows);
    out.mask.reserve(rows.size() * m.cols());
    for (std::size_t r : rows) {
        out.mask.insert(out.mask.end(), m.mask.begin() + static_cast<std::ptrdiff_t>(r * m.cols()),
                        m.mask.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.cols()));
        out.patient_ids.push_back(m.patient_ids[r]);
        out.labels.push_back(m.labels[r]);
        out.codes.push_back(m.codes[r]);
        out.age.push_back(m.age[r]);
        out.sex.push_back(m.sex[r]);
        out.subgroup.push_back(m.subgroup[r]);
    }
    return out;
}

namespace {

constexpr double kThresholdSlack = 1e-12;

PatientMatrix keep_columns(const PatientMatrix& m, const std::vector<std::size_t>& cols) {
    PatientMatrix out = m;
    out.feature_names.clear();
    for (std::size_t c : cols) out.feature_names.push_back(m.feature_names[c]);
    out.features = Matrix(m.rows(), cols.size());
    out.mask.assign(m.rows() * cols.size(), 0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out.features(i, j) = m.features(i, cols[j]);
            out.mask[i * cols.size() + j] = m.mask[i * m.cols() + cols[j]];
        }
    }
    return out;
}

} // namespace

PatientMatrix filter_features_and_cases(const PatientMatrix& m, const FilterOptions& options, FilterReport* report) {
    m.validate();
    PatientMatrix current = m;
    while (true) {
        bool changed = false;
        const auto n = static_cast<double>(current.rows());
        std::vector<std::size_t> keep;
        for (std::size_t c = 0; c < current.cols(); ++c) {
            std::size_t count = 0;
            for (std::size_t r = 0; r < current.rows(); ++r) count += current.present(r, c);
            const double fraction = n > 0 ? static_cast<double>(count) / n : 0.0;
            if (fraction > options.min_feature_presence + kThresholdSlack) {
                keep.push_back(c);
            } else if (report) {
                report->dropped_features.push_back(current.feature_names[c]);
            }
        }
        if (keep.empty()) throw DomainError("filter_features_and_cases: every feature was dropped");
        if (keep.size() != current.cols()) {
            current = keep_columns(current, keep);
            changed = true;
        }

        std::vector<std::size_t> rows;
        const auto d = static_cast<double>(current.cols());
        for (std::size_t r = 0; r < current.rows(); ++r) {
            std::size_t count = 0;
            for (std::size_t c = 0; c < current.cols(); ++c) count += current.present(r, c);
            if (static_cast<double>(count) / d < options.min_case_coverage - kThresholdSlack) {
                if (report) report->dropped_patients.push_back(current.patient_ids[r]);
            } else {
                rows.push_back(r);
            }
        }
        if (rows.size() != current.rows()) {
            current = subset_rows(current, rows);
            changed = true;
        }
        if (!changed) return current;
    }
}

Standardizer Standardizer::fit(const PatientMatrix& m, std::span<const std::size_t> train_rows) {
    m.validate();
    if (train_rows.empty()) throw DomainError("Standardizer::fit: no training rows");
    Standardizer s;
    const std::size_t d = m.cols();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    s.zero_variance.assign(d, false);
    for (std::size_t c = 0; c < d; ++c) {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t r : train_rows) {
            if (m.present(r, c)) {
                total += m.features(r, c);
                ++count;
            }
        }
        s.mean[c] = count > 0 ? total / static_cast<double>(count) : 0.0;
        double ss = 0.0;
        for (std::size_t r : train_rows) {
            const double v = m.present(r, c) ? m.features(r, c) - s.mean[c] : 0.0;
            ss += v * v;
        }
        const double sd = std::sqrt(ss / static_cast<double>(train_rows.size()));
        if (sd > 1e-12 * std::max(1.0, std::abs(s.mean[c]))) {
            s.scale[c] = sd;
        } else {
            s.zero_variance[c] = true;
        }
    }
    return s;
}

Matrix Standardizer::transform(const PatientMatrix& m, std::span<const std::size_t> rows) const {
    if (m.cols() != mean.size()) {
        throw ShapeError(fmt::format("Standardizer: fitted on {} features, given {}", mean.size(), m.cols()));
    }
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (zero_variance[c] || !m.present(rows[i], c)) continue;
            out(i, c) = (m.features(rows[i], c) - mean[c]) / scale[c];
        }
    }
    return out;
}

Matrix Standardizer::transform(const PatientMatrix& m) const {
    std::vector<std::size_t> all(m.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return transform(m, all);
}

void write_matrix_csv(std::ostream& out, const PatientMatrix& m) {
    m.validate();
    out << "patient_id,label";
    for (const auto& f : m.feature_names) out << ',' << csv_escape(f);
    out << ",codes\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << csv_escape(m.patient_ids[r]) << ',' << m.labels[r];
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out << ',';
            if (m.present(r, c)) out << format_double(m.features(r, c));
        }
        out << ',' << csv_escape(fmt::format("{}", fmt::join(m.codes[r], ";"))) << '\n';
    }
}

PatientMatrix read_matrix_csv(std::istream& in) {
    CsvReader reader(in);
    const auto header = reader.next();
    if (!header || header->size() < 3 || (*header)[0] != "patient_id" || (*header)[1] != "label" ||
        header->back() != "codes") {
        throw FormatError("matrix csv: header must be patient_id,label,<features...>,codes");
    }
    PatientMatrix m;
    m.feature_names.assign(header->begin() + 2, header->end() - 1);
    const std::size_t d = m.feature_names.size();
    std::vector<double> values;
    while (auto row = reader.next()) {
        if (row->size() != header->size()) {
            throw FormatError(fmt::format("matrix csv line {}: expected {} fields", reader.line(), header->size()));
        }
        m.patient_ids.push_back((*row)[0]);
        const auto& label = (*row)[1];
        if (label != "0" && label != "1") {
            throw FormatError(fmt::format("matrix csv line {}: label '{}' is not binary", reader.line(), label));
        }
        m.labels.push_back(label == "1");
        for (std::size_t c = 0; c < d; ++c) {
            const auto& cell = (*row)[2 + c];
            if (cell.empty()) {
                values.push_back(0.0);
                m.mask.push_back(0);
                continue;
            }
            const auto v = parse_double(cell);
            if (!v) throw FormatError(fmt::format("matrix csv line {}: '{}' is not numeric", reader.line(), cell));
            values.push_back(*v);
            m.mask.push_back(1);
        }
        std::vector<std::string> codes;
        const std::string& cell = row->back();
        std::size_t start = 0;
        while (start < cell.size()) {
            const std::size_t end = std::min(cell.find(';', start), cell.size());
            if (end > start) codes.push_back(cell.substr(start, end - start));
            start = end + 1;
        }
        m.codes.push_back(analysis::make_code_set(std::move(codes)));
        m.age.push_back(0.0);
        m.sex.push_back(0);
        m.subgroup.push_back(-1);
    }
    m.features = Matrix(m.patient_ids.size(), d, std::move(values));
    return m;
}

PatientMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open matrix file '{}'", path.string()));
    return read_matrix_csv(in);
}

} // namespace dsec::cohort
