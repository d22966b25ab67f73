#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsec/model/cluster_head.hpp"
#include "dsec/nn/dense.hpp"

namespace dsec::model {

/// Serializable model state.
///
/// Text format, version 1 (one token group per line, numbers written in the
/// shortest form that parses back to the identical double):
///
///     dsec-checkpoint 1
///     attr <key> <value>              (repeated; value runs to end of line)
///     vector <name> <n> v1 ... vn     (repeated)
///     stack <name> <layer-count>      (repeated) followed, per layer, by
///       layer <in> <out> <activation> <trainable 0|1>
///       weights w11 ... (in·out values, row-major)
///       bias b1 ... bout
///     centroids <k> <m> <alpha>       (optional) followed by one line of k·m values
///     end
///
/// Stacks are named, e.g. "encoder", "decoder", "classifier",
/// "transfer_encoder". The attr "phase" records the phase at which the
/// checkpoint was taken.
struct Checkpoint {
    std::map<std::string, std::string> attributes;
    std::map<std::string, std::vector<double>> vectors;
    std::map<std::string, std::vector<DenseLayer>> stacks;
    std::optional<ClusterHead> cluster_head;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace dsec::model
