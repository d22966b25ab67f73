#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsec/analysis/linkage.hpp"
#include "dsec/cohort/patient_matrix.hpp"
#include "dsec/cohort/split.hpp"
#include "dsec/error.hpp"
#include "dsec/nn/matrix.hpp"

namespace dsec::cli {

/// A required input is absent or stale; the message names the command to run.
class MissingArtifact : public Error {
public:
    using Error::Error;
};

/// The output directory and its manifest.json. Each artifact entry records the
/// producing stage, the configuration fingerprint and a content hash, so
/// files copied in from another run or edited by hand are detected.
class Workspace {
public:
    Workspace(std::filesystem::path dir, std::string fingerprint, std::uint64_t seed);

    std::filesystem::path path(const std::string& name) const { return dir_ / name; }

    /// Throws MissingArtifact unless `name` exists, was produced under the
    /// current fingerprint and is unchanged since. `hint` is appended to the
    /// message, e.g. the full command line.
    void require(const std::string& name, const std::string& command, const std::string& hint = "") const;
    bool fresh(const std::string& name) const;
    /// Why `name` is not fresh, or empty.
    std::string problem(const std::string& name) const;

    /// Records `name` as produced by `stage` and rewrites the manifest.
    void record(const std::string& name, const std::string& stage);

    const nlohmann::json& manifest() const { return manifest_; }
    const std::string& fingerprint() const { return fingerprint_; }

private:
    void save() const;

    std::filesystem::path dir_;
    std::string fingerprint_;
    nlohmann::json manifest_;
};

/// Pretty-printed with a trailing newline.
/// FNV-1a over the file bytes, 16 hex digits.
std::string content_hash(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// patient_id,label,set,fold with set ∈ {train, test}; fold is −1 for test rows.
void write_split_csv(const std::filesystem::path& path, const cohort::PatientMatrix& m, const cohort::Split& split);
cohort::Split read_split_csv(const std::filesystem::path& path, const cohort::PatientMatrix& m);

struct Embedding {
    std::vector<std::string> patient_ids;
    Matrix z;
    std::vector<int> labels;
};

/// patient_id,z1,...,zm,label
void write_embedding_csv(const std::filesystem::path& path, const Embedding& e);
Embedding read_embedding_csv(const std::filesystem::path& path);

/// step,left,right,distance,new_id,size
void write_linkage_csv(const std::filesystem::path& path, const analysis::LinkageTree& tree);
analysis::LinkageTree read_linkage_csv(const std::filesystem::path& path);

} // namespace dsec::cli
