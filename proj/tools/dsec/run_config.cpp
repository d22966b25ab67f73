#include "run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <string_view>
#include <type_traits>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace dsec::cli {

using nlohmann::json;

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(fmt::format("invalid configuration:\n  - {}", fmt::join(problems, "\n  - "))), problems_(std::move(problems)) {}

namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t fields are read as uint64");

class Reader {
public:
    explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

    // Returns the object at `key`, or nullptr when absent or not an object.
    const json* section(const json& obj, std::string_view key, const std::string& path) {
        const auto it = obj.find(key);
        if (it == obj.end()) return nullptr;
        if (!it->is_object()) {
            problems_.push_back(fmt::format("{}: expected an object", join(path, key)));
            return nullptr;
        }
        return &*it;
    }

    void known(const json& obj, std::initializer_list<std::string_view> keys, const std::string& path) {
        for (const auto& [key, value] : obj.items()) {
            bool found = false;
            for (auto k : keys) found = found || k == key;
            if (!found) problems_.push_back(fmt::format("{}: unknown key", join(path, key)));
        }
    }

    void read(const json& obj, std::string_view key, const std::string& path, double& out) {
        if (const json* v = find(obj, key)) {
            if (v->is_number()) out = v->get<double>();
            else problems_.push_back(fmt::format("{}: expected a number", join(path, key)));
        }
    }
    void read(const json& obj, std::string_view key, const std::string& path, std::uint64_t& out) {
        if (const json* v = find(obj, key)) {
            if (non_negative_integer(*v)) out = v->get<std::uint64_t>();
            else problems_.push_back(fmt::format("{}: expected a non-negative integer", join(path, key)));
        }
    }
    void read(const json& obj, std::string_view key, const std::string& path, bool& out) {
        if (const json* v = find(obj, key)) {
            if (v->is_boolean()) out = v->get<bool>();
            else problems_.push_back(fmt::format("{}: expected true or false", join(path, key)));
        }
    }
    void read(const json& obj, std::string_view key, const std::string& path, std::string& out) {
        if (const json* v = find(obj, key)) {
            if (v->is_string()) out = v->get<std::string>();
            else problems_.push_back(fmt::format("{}: expected a string", join(path, key)));
        }
    }
    void read(const json& obj, std::string_view key, const std::string& path, std::vector<std::string>& out) {
        if (const json* v = find(obj, key)) {
            bool ok = v->is_array();
            if (ok) {
                for (const auto& e : *v) ok = ok && e.is_string();
            }
            if (ok) out = v->get<std::vector<std::string>>();
            else problems_.push_back(fmt::format("{}: expected an array of strings", join(path, key)));
        }
    }
    void read(const json& obj, std::string_view key, const std::string& path, std::vector<std::size_t>& out) {
        if (const json* v = find(obj, key)) {
            bool ok = v->is_array();
            if (ok) {
                for (const auto& e : *v) ok = ok && non_negative_integer(e);
            }
            if (ok) out = v->get<std::vector<std::size_t>>();
            else problems_.push_back(fmt::format("{}: expected an array of non-negative integers", join(path, key)));
        }
    }

    static std::string join(const std::string& path, std::string_view key) {
        return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
    }

private:
    // Values built in code are stored signed even when non-negative.
    static bool non_negative_integer(const json& v) {
        return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    }

    static const json* find(const json& obj, std::string_view key) {
        const auto it = obj.find(key);
        return it == obj.end() ? nullptr : &*it;
    }

    std::vector<std::string>& problems_;
};

std::vector<std::string> names_of(const std::vector<Activation>& acts) {
    std::vector<std::string> out;
    for (Activation a : acts) out.emplace_back(to_string(a));
    return out;
}

void require(std::vector<std::string>& problems, bool ok, std::string message) {
    if (!ok) problems.push_back(std::move(message));
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

eval::ComparisonConfig RunConfig::comparison() const {
    eval::ComparisonConfig c;
    c.shape = model;
    c.schedule = training;
    c.k = k;
    c.forest = forest;
    c.split = split;
    c.pca_dims = pca_dims;
    c.cross_validate = cross_validate;
    return c;
}

cohort::SyntheticSpec RunConfig::synthetic_spec() const {
    const std::uint64_t s = eval::stream_seed(seed, "synthetic");
    auto spec = data.synthetic.null_model ? cohort::null_synthetic_spec(s) : cohort::default_synthetic_spec(s);
    spec.n_patients = data.synthetic.n_patients;
    spec.missingness_rate = data.synthetic.missingness_rate;
    if (!data.synthetic.null_model) spec.class_separation = data.synthetic.class_separation;
    return spec;
}

RunConfig config_from_json(const json& j, RunConfig c) {
    std::vector<std::string> problems;
    if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
    Reader r(problems);
    r.known(j, {"seed", "output_dir", "data", "preprocess", "model", "training", "k", "split", "forest", "evaluation",
                "enrichment"},
            "");
    r.read(j, "seed", "", c.seed);
    r.read(j, "output_dir", "", c.output_dir);
    r.read(j, "k", "", c.k);

    if (const json* s = r.section(j, "data", "")) {
        r.known(*s, {"source", "path", "synthetic"}, "data");
        r.read(*s, "source", "data", c.data.source);
        r.read(*s, "path", "data", c.data.path);
        if (const json* syn = r.section(*s, "synthetic", "data")) {
            const std::string p = "data.synthetic";
            r.known(*syn, {"n_patients", "class_separation", "missingness_rate", "null_model"}, p);
            r.read(*syn, "n_patients", p, c.data.synthetic.n_patients);
            r.read(*syn, "class_separation", p, c.data.synthetic.class_separation);
            r.read(*syn, "missingness_rate", p, c.data.synthetic.missingness_rate);
            r.read(*syn, "null_model", p, c.data.synthetic.null_model);
        }
    }
    if (const json* s = r.section(j, "preprocess", "")) {
        r.known(*s, {"min_feature_presence", "min_case_coverage", "propensity_match"}, "preprocess");
        r.read(*s, "min_feature_presence", "preprocess", c.preprocess.filter.min_feature_presence);
        r.read(*s, "min_case_coverage", "preprocess", c.preprocess.filter.min_case_coverage);
        r.read(*s, "propensity_match", "preprocess", c.preprocess.propensity_match);
    }
    if (const json* s = r.section(j, "model", "")) {
        r.known(*s, {"hidden", "embedding_dim", "corruption_sigma", "init", "activations"}, "model");
        r.read(*s, "hidden", "model", c.model.hidden);
        r.read(*s, "embedding_dim", "model", c.model.embedding_dim);
        r.read(*s, "corruption_sigma", "model", c.model.corruption_sigma);
        std::string init(to_string(c.model.init));
        r.read(*s, "init", "model", init);
        try {
            c.model.init = weight_init_from_string(init);
        } catch (const DomainError&) {
            problems.push_back(fmt::format("model.init: '{}' is not glorot_uniform or he_uniform", init));
        }
        if (const json* a = r.section(*s, "activations", "model")) {
            r.known(*a, {"dec", "dsec"}, "model.activations");
            for (auto [key, out] : {std::pair{"dec", &c.model.dec_activations},
                                    std::pair{"dsec", &c.model.dsec_activations}}) {
                std::vector<std::string> names;
                r.read(*a, key, "model.activations", names);
                out->clear();
                for (const auto& n : names) {
                    try {
                        out->push_back(activation_from_string(n));
                    } catch (const DomainError&) {
                        problems.push_back(fmt::format("model.activations.{}: unknown activation '{}'", key, n));
                    }
                }
            }
        }
    }
    if (const json* s = r.section(j, "training", "")) {
        const std::string p = "training";
        r.known(*s, {"pretrain_epochs", "transfer_epochs", "cluster_epochs", "learning_rate", "beta1", "beta2", "epsilon",
                     "batch_size", "early_stop_tolerance", "alpha"},
                p);
        r.read(*s, "pretrain_epochs", p, c.training.pretrain_epochs);
        r.read(*s, "transfer_epochs", p, c.training.transfer_epochs);
        r.read(*s, "cluster_epochs", p, c.training.cluster_epochs);
        r.read(*s, "learning_rate", p, c.training.adam.learning_rate);
        r.read(*s, "beta1", p, c.training.adam.beta1);
        r.read(*s, "beta2", p, c.training.adam.beta2);
        r.read(*s, "epsilon", p, c.training.adam.epsilon);
        r.read(*s, "batch_size", p, c.training.batch_size);
        r.read(*s, "early_stop_tolerance", p, c.training.early_stop_tolerance);
        r.read(*s, "alpha", p, c.training.alpha);
    }
    if (const json* s = r.section(j, "split", "")) {
        r.known(*s, {"test_fraction", "n_folds"}, "split");
        r.read(*s, "test_fraction", "split", c.split.test_fraction);
        r.read(*s, "n_folds", "split", c.split.n_folds);
    }
    if (const json* s = r.section(j, "forest", "")) {
        r.known(*s, {"n_trees", "max_depth", "min_samples_split", "max_features", "bootstrap"}, "forest");
        r.read(*s, "n_trees", "forest", c.forest.n_trees);
        r.read(*s, "max_depth", "forest", c.forest.max_depth);
        r.read(*s, "min_samples_split", "forest", c.forest.min_samples_split);
        r.read(*s, "max_features", "forest", c.forest.max_features);
        r.read(*s, "bootstrap", "forest", c.forest.bootstrap);
    }
    if (const json* s = r.section(j, "evaluation", "")) {
        r.known(*s, {"pca_dims", "cross_validate"}, "evaluation");
        r.read(*s, "pca_dims", "evaluation", c.pca_dims);
        r.read(*s, "cross_validate", "evaluation", c.cross_validate);
    }
    if (const json* s = r.section(j, "enrichment", "")) {
        r.known(*s, {"alpha", "depth", "min_cluster_size"}, "enrichment");
        r.read(*s, "alpha", "enrichment", c.enrichment.alpha);
        r.read(*s, "depth", "enrichment", c.enrichment.depth);
        r.read(*s, "min_cluster_size", "enrichment", c.enrichment.min_cluster_size);
    }
    if (!problems.empty()) {
        // Report range violations of the values that did parse in the same go.
        for (auto& extra : config_problems(c)) problems.push_back(std::move(extra));
        throw ConfigError(std::move(problems));
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError({fmt::format("cannot open config file '{}'", path.string())});
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({fmt::format("{}: {}", path.string(), e.what())});
    }
    return config_from_json(j, std::move(base));
}

json config_to_json(const RunConfig& c) {
    return json{
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"data",
         {{"source", c.data.source},
          {"path", c.data.path},
          {"synthetic",
           {{"n_patients", c.data.synthetic.n_patients},
            {"class_separation", c.data.synthetic.class_separation},
            {"missingness_rate", c.data.synthetic.missingness_rate},
            {"null_model", c.data.synthetic.null_model}}}}},
        {"preprocess",
         {{"min_feature_presence", c.preprocess.filter.min_feature_presence},
          {"min_case_coverage", c.preprocess.filter.min_case_coverage},
          {"propensity_match", c.preprocess.propensity_match}}},
        {"model",
         {{"hidden", c.model.hidden},
          {"embedding_dim", c.model.embedding_dim},
          {"corruption_sigma", c.model.corruption_sigma},
          {"init", std::string(to_string(c.model.init))},
          {"activations", {{"dec", names_of(c.model.dec_activations)}, {"dsec", names_of(c.model.dsec_activations)}}}}},
        {"training",
         {{"pretrain_epochs", c.training.pretrain_epochs},
          {"transfer_epochs", c.training.transfer_epochs},
          {"cluster_epochs", c.training.cluster_epochs},
          {"learning_rate", c.training.adam.learning_rate},
          {"beta1", c.training.adam.beta1},
          {"beta2", c.training.adam.beta2},
          {"epsilon", c.training.adam.epsilon},
          {"batch_size", c.training.batch_size},
          {"early_stop_tolerance", c.training.early_stop_tolerance},
          {"alpha", c.training.alpha}}},
        {"k", c.k},
        {"split", {{"test_fraction", c.split.test_fraction}, {"n_folds", c.split.n_folds}}},
        {"forest",
         {{"n_trees", c.forest.n_trees},
          {"max_depth", c.forest.max_depth},
          {"min_samples_split", c.forest.min_samples_split},
          {"max_features", c.forest.max_features},
          {"bootstrap", c.forest.bootstrap}}},
        {"evaluation", {{"pca_dims", c.pca_dims}, {"cross_validate", c.cross_validate}}},
        {"enrichment",
         {{"alpha", c.enrichment.alpha},
          {"depth", c.enrichment.depth},
          {"min_cluster_size", c.enrichment.min_cluster_size}}},
    };
}

std::vector<std::string> config_problems(const RunConfig& c) {
    std::vector<std::string> p;
    require(p, !c.output_dir.empty(), "output_dir: must not be empty");
    require(p, c.data.source == "synthetic" || c.data.source == "csv",
            fmt::format("data.source: '{}' is not synthetic or csv", c.data.source));
    require(p, c.data.source != "csv" || !c.data.path.empty(), "data.path: required when data.source is csv");
    require(p, c.data.synthetic.n_patients >= 20, "data.synthetic.n_patients: must be at least 20");
    require(p, c.data.synthetic.class_separation >= 0.0, "data.synthetic.class_separation: must be non-negative");
    require(p, c.data.synthetic.missingness_rate >= 0.0 && c.data.synthetic.missingness_rate < 1.0,
            "data.synthetic.missingness_rate: must lie in [0, 1)");
    for (const auto& [name, v] : {std::pair{"min_feature_presence", c.preprocess.filter.min_feature_presence},
                                  std::pair{"min_case_coverage", c.preprocess.filter.min_case_coverage}}) {
        require(p, v >= 0.0 && v < 1.0, fmt::format("preprocess.{}: must lie in [0, 1)", name));
    }
    require(p, !c.model.hidden.empty(), "model.hidden: need at least one hidden layer");
    for (std::size_t w : c.model.hidden) require(p, w > 0, "model.hidden: widths must be positive");
    require(p, c.model.embedding_dim > 0, "model.embedding_dim: must be positive");
    require(p, c.model.corruption_sigma >= 0.0, "model.corruption_sigma: must be non-negative");
    for (const auto& [key, acts] : {std::pair{"dec", &c.model.dec_activations},
                                    std::pair{"dsec", &c.model.dsec_activations}}) {
        if (acts->empty()) continue;
        require(p, acts->size() == c.model.hidden.size() + 1,
                fmt::format("model.activations.{}: need {} entries, one per encoder layer", key,
                            c.model.hidden.size() + 1));
        for (Activation a : *acts)
            require(p, a != Activation::softmax, fmt::format("model.activations.{}: softmax is not allowed", key));
    }
    require(p, c.training.pretrain_epochs > 0, "training.pretrain_epochs: must be positive");
    require(p, c.training.transfer_epochs > 0, "training.transfer_epochs: must be positive");
    require(p, c.training.cluster_epochs > 0, "training.cluster_epochs: must be positive");
    require(p, c.training.adam.learning_rate > 0.0, "training.learning_rate: must be positive");
    require(p, c.training.adam.beta1 >= 0.0 && c.training.adam.beta1 < 1.0, "training.beta1: must lie in [0, 1)");
    require(p, c.training.adam.beta2 >= 0.0 && c.training.adam.beta2 < 1.0, "training.beta2: must lie in [0, 1)");
    require(p, c.training.adam.epsilon > 0.0, "training.epsilon: must be positive");
    require(p, c.training.early_stop_tolerance >= 0.0 && c.training.early_stop_tolerance < 1.0,
            "training.early_stop_tolerance: must lie in [0, 1)");
    require(p, c.training.alpha > 0.0, "training.alpha: must be positive");
    require(p, c.k >= 2, "k: must be at least 2");
    require(p, c.split.test_fraction > 0.0 && c.split.test_fraction < 1.0, "split.test_fraction: must lie in (0, 1)");
    require(p, c.split.n_folds >= 2, "split.n_folds: must be at least 2");
    require(p, c.forest.n_trees > 0, "forest.n_trees: must be positive");
    require(p, c.forest.max_depth > 0, "forest.max_depth: must be positive");
    require(p, c.forest.min_samples_split >= 2, "forest.min_samples_split: must be at least 2");
    require(p, c.pca_dims > 0, "evaluation.pca_dims: must be positive");
    require(p, c.enrichment.alpha > 0.0 && c.enrichment.alpha < 1.0, "enrichment.alpha: must lie in (0, 1)");
    require(p, c.enrichment.depth > 0, "enrichment.depth: must be positive");
    require(p, c.enrichment.min_cluster_size > 0, "enrichment.min_cluster_size: must be positive");
    return p;
}

void validate_config(const RunConfig& config) {
    if (auto p = config_problems(config); !p.empty()) throw ConfigError(std::move(p));
}

std::string fingerprint(const RunConfig& config) {
    json j = config_to_json(config);
    j.erase("output_dir");
    return fmt::format("{:016x}", fnv1a(j.dump()));
}

} // namespace dsec::cli
