#include "artifacts.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "dsec/cohort/csv.hpp"

namespace dsec::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
    return in;
}

std::size_t parse_index(const std::string& cell, const fs::path& path, std::size_t line) {
    const auto v = cohort::parse_double(cell);
    if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
        throw FormatError(fmt::format("{} line {}: '{}' is not a non-negative integer", path.string(), line, cell));
    }
    return static_cast<std::size_t>(*v);
}

double parse_number(const std::string& cell, const fs::path& path, std::size_t line) {
    const auto v = cohort::parse_double(cell);
    if (!v) throw FormatError(fmt::format("{} line {}: '{}' is not numeric", path.string(), line, cell));
    return *v;
}

} // namespace

Workspace::Workspace(fs::path dir, std::string fingerprint, std::uint64_t seed)
    : dir_(std::move(dir)), fingerprint_(std::move(fingerprint)) {
    fs::create_directories(dir_);
    if (fs::exists(path("manifest.json"))) manifest_ = read_json(path("manifest.json"));
    if (!manifest_.is_object()) manifest_ = json::object();
    manifest_["format"] = "dsec-manifest 1";
    manifest_["fingerprint"] = fingerprint_;
    manifest_["seed"] = seed;
    if (!manifest_.contains("artifacts")) manifest_["artifacts"] = json::object();
}

std::string Workspace::problem(const std::string& name) const {
    if (!fs::exists(path(name))) return "is missing";
    const auto& a = manifest_["artifacts"];
    if (!a.contains(name)) return "is not listed in the manifest";
    if (a[name].value("fingerprint", "") != fingerprint_) return "was produced under a different configuration";
    if (a[name].value("hash", "") != content_hash(path(name))) return "was modified after it was written";
    return {};
}

bool Workspace::fresh(const std::string& name) const { return problem(name).empty(); }

void Workspace::require(const std::string& name, const std::string& command, const std::string& hint) const {
    const auto why = problem(name);
    if (why.empty()) return;
    throw MissingArtifact(fmt::format("{} {}: run `{}` first{}", path(name).string(), why, command,
                                      hint.empty() ? "" : fmt::format(" ({})", hint)));
}

void Workspace::record(const std::string& name, const std::string& stage) {
    manifest_["artifacts"][name] =
        json{{"stage", stage}, {"fingerprint", fingerprint_}, {"hash", content_hash(path(name))}};
    save();
}

void Workspace::save() const { write_json(path("manifest.json"), manifest_); }

std::string content_hash(const fs::path& path) {
    auto in = open_in(path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return fmt::format("{:016x}", h);
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_split_csv(const fs::path& path, const cohort::PatientMatrix& m, const cohort::Split& split) {
    std::vector<long> fold(m.rows(), -2);
    for (std::size_t r : split.test) fold[r] = -1;
    for (std::size_t f = 0; f < split.folds.size(); ++f)
        for (std::size_t r : split.folds[f]) fold[r] = static_cast<long>(f);
    auto out = open_out(path);
    out << "patient_id,label,set,fold\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (fold[r] == -2) continue;
        out << cohort::csv_escape(m.patient_ids[r]) << ',' << m.labels[r] << ',' << (fold[r] < 0 ? "test" : "train") << ','
            << fold[r] << '\n';
    }
}

cohort::Split read_split_csv(const fs::path& path, const cohort::PatientMatrix& m) {
    std::map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < m.rows(); ++r) row_of[m.patient_ids[r]] = r;
    auto in = open_in(path);
    cohort::CsvReader reader(in);
    const auto header = reader.next();
    if (!header || *header != std::vector<std::string>{"patient_id", "label", "set", "fold"}) {
        throw FormatError(fmt::format("{}: header must be patient_id,label,set,fold", path.string()));
    }
    cohort::Split split;
    while (auto row = reader.next()) {
        if (row->size() != 4) throw FormatError(fmt::format("{} line {}: expected 4 fields", path.string(), reader.line()));
        const auto it = row_of.find((*row)[0]);
        if (it == row_of.end()) {
            throw FormatError(fmt::format("{} line {}: unknown patient '{}'", path.string(), reader.line(), (*row)[0]));
        }
        if ((*row)[2] == "test") {
            split.test.push_back(it->second);
        } else if ((*row)[2] == "train") {
            const std::size_t f = parse_index((*row)[3], path, reader.line());
            if (split.folds.size() <= f) split.folds.resize(f + 1);
            split.folds[f].push_back(it->second);
            split.train.push_back(it->second);
        } else {
            throw FormatError(fmt::format("{} line {}: set '{}' is not train or test", path.string(), reader.line(), (*row)[2]));
        }
    }
    for (auto* v : {&split.train, &split.test}) std::sort(v->begin(), v->end());
    for (auto& f : split.folds) std::sort(f.begin(), f.end());
    return split;
}

void write_embedding_csv(const fs::path& path, const Embedding& e) {
    auto out = open_out(path);
    out << "patient_id";
    for (std::size_t j = 0; j < e.z.cols(); ++j) out << ",z" << j + 1;
    out << ",label\n";
    for (std::size_t i = 0; i < e.z.rows(); ++i) {
        out << cohort::csv_escape(e.patient_ids[i]);
        for (std::size_t j = 0; j < e.z.cols(); ++j) out << ',' << cohort::format_double(e.z(i, j));
        out << ',' << e.labels[i] << '\n';
    }
}

Embedding read_embedding_csv(const fs::path& path) {
    auto in = open_in(path);
    cohort::CsvReader reader(in);
    const auto header = reader.next();
    if (!header || header->size() < 3 || header->front() != "patient_id" || header->back() != "label") {
        throw FormatError(fmt::format("{}: header must be patient_id,z1,...,label", path.string()));
    }
    const std::size_t m = header->size() - 2;
    Embedding e;
    std::vector<double> values;
    while (auto row = reader.next()) {
        if (row->size() != header->size()) {
            throw FormatError(fmt::format("{} line {}: expected {} fields", path.string(), reader.line(), header->size()));
        }
        e.patient_ids.push_back((*row)[0]);
        for (std::size_t j = 0; j < m; ++j) values.push_back(parse_number((*row)[1 + j], path, reader.line()));
        e.labels.push_back(static_cast<int>(parse_index(row->back(), path, reader.line())));
    }
    e.z = Matrix(e.patient_ids.size(), m, std::move(values));
    return e;
}

void write_linkage_csv(const fs::path& path, const analysis::LinkageTree& tree) {
    auto out = open_out(path);
    out << "step,left,right,distance,new_id,size\n";
    for (std::size_t s = 0; s < tree.merges.size(); ++s) {
        const auto& m = tree.merges[s];
        out << s << ',' << m.left << ',' << m.right << ',' << cohort::format_double(m.distance) << ',' << m.new_id << ','
            << m.size << '\n';
    }
}

analysis::LinkageTree read_linkage_csv(const fs::path& path) {
    auto in = open_in(path);
    cohort::CsvReader reader(in);
    const auto header = reader.next();
    if (!header || *header != std::vector<std::string>{"step", "left", "right", "distance", "new_id", "size"}) {
        throw FormatError(fmt::format("{}: header must be step,left,right,distance,new_id,size", path.string()));
    }
    analysis::LinkageTree tree;
    while (auto row = reader.next()) {
        if (row->size() != 6) throw FormatError(fmt::format("{} line {}: expected 6 fields", path.string(), reader.line()));
        analysis::Merge m;
        m.left = parse_index((*row)[1], path, reader.line());
        m.right = parse_index((*row)[2], path, reader.line());
        m.distance = parse_number((*row)[3], path, reader.line());
        m.new_id = parse_index((*row)[4], path, reader.line());
        m.size = parse_index((*row)[5], path, reader.line());
        tree.merges.push_back(m);
    }
    tree.leaf_count = tree.merges.size() + 1;
    for (std::size_t s = 0; s < tree.merges.size(); ++s) {
        const auto& m = tree.merges[s];
        if (m.new_id != tree.leaf_count + s || m.left >= m.new_id || m.right >= m.new_id || m.left >= m.right) {
            throw FormatError(fmt::format("{}: merge {} is inconsistent", path.string(), s));
        }
    }
    return tree;
}

} // namespace dsec::cli
