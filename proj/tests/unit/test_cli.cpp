#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "artifacts.hpp"
#include "dsec/analysis/linkage.hpp"
#include "pipeline.hpp"
#include "run_config.hpp"
#include "test_util.hpp"

using namespace dsec;
using namespace dsec::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("dsec_cli_test_" + name);
    fs::remove_all(dir);
    return dir;
}

RunConfig quick_config(const fs::path& out, std::uint64_t seed = 3) {
    return config_from_json(json{
        {"seed", seed},
        {"output_dir", out.string()},
        {"data", {{"synthetic", {{"n_patients", 240}}}}},
        {"training", {{"pretrain_epochs", 3}, {"transfer_epochs", 2}, {"cluster_epochs", 3}}},
        {"forest", {{"n_trees", 10}}},
        {"enrichment", {{"depth", 2}}},
    });
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST(Config, DefaultsAreValid) {
    const RunConfig c;
    EXPECT_NO_THROW(validate_config(c));
    EXPECT_EQ(c.training.pretrain_epochs, 50u);
    EXPECT_EQ(c.training.transfer_epochs, 10u);
    EXPECT_EQ(c.training.cluster_epochs, 200u);
    EXPECT_EQ(c.training.batch_size, 256u);
    EXPECT_EQ(c.training.adam.learning_rate, 0.01);
    EXPECT_EQ(c.model.corruption_sigma, 0.1);
    EXPECT_EQ(c.k, 2u);
    EXPECT_EQ(c.enrichment.depth, 4u);
}

TEST(Config, JsonRoundTripAndOverlay) {
    auto c = config_from_json(json{{"seed", 9}, {"model", {{"hidden", {16, 8}}, {"init", "he_uniform"}}}});
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.model.hidden, (std::vector<std::size_t>{16, 8}));
    EXPECT_EQ(c.model.init, WeightInit::he_uniform);
    const auto back = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(back), config_to_json(c));
    EXPECT_EQ(fingerprint(back), fingerprint(c));
}

TEST(Config, ActivationOverridesReachTheEncoderSpec) {
    const auto c = config_from_json(json{{"model", {{"activations", {{"dec", {"linear", "relu", "relu"}}}}}}});
    const auto dec = c.model.spec(13, model::Variant::dec);
    EXPECT_EQ(dec.activations, (std::vector<Activation>{Activation::linear, Activation::relu, Activation::relu}));
    const auto dsec = c.model.spec(13, model::Variant::dsec);
    EXPECT_EQ(dsec.activations, (std::vector<Activation>{Activation::relu, Activation::relu, Activation::relu}));
    EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c));

    EXPECT_THROW(validate_config(config_from_json(json{{"model", {{"activations", {{"dsec", {"relu"}}}}}}})),
                 ConfigError);
    EXPECT_THROW(config_from_json(json{{"model", {{"activations", {{"dsec", {"relu", "tanh", "relu"}}}}}}}),
                 ConfigError);
}

TEST(Config, EveryProblemIsListed) {
    try {
        config_from_json(json{{"sed", 1}, {"k", "two"}, {"training", {{"learning_rate", -1}}}, {"split", {{"extra", 1}}}});
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const auto& p = e.problems();
        const auto has = [&](const std::string& s) {
            return std::any_of(p.begin(), p.end(), [&](const auto& x) { return x.find(s) != std::string::npos; });
        };
        EXPECT_TRUE(has("sed"));
        EXPECT_TRUE(has("k"));
        EXPECT_TRUE(has("split.extra"));
        EXPECT_TRUE(has("learning_rate"));
    }
}

TEST(Config, FingerprintIgnoresOutputDirectoryOnly) {
    RunConfig a, b;
    b.output_dir = "elsewhere";
    EXPECT_EQ(fingerprint(a), fingerprint(b));
    b.seed = 2;
    EXPECT_NE(fingerprint(a), fingerprint(b));
    EXPECT_EQ(fingerprint(a).size(), 16u);
}

TEST(Config, LoadFromFile) {
    const auto dir = scratch("load");
    fs::create_directories(dir);
    std::ofstream(dir / "c.json") << R"({"k": 3, "enrichment": {"alpha": 0.01}})";
    const auto c = load_config(dir / "c.json");
    EXPECT_EQ(c.k, 3u);
    EXPECT_EQ(c.enrichment.alpha, 0.01);
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
    EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(Artifacts, EmbeddingAndLinkageRoundTrip) {
    const auto dir = scratch("roundtrip");
    fs::create_directories(dir);
    Rng rng(1);
    Embedding e{{"a", "b", "c,d"}, test::random_matrix(3, 3, rng), {0, 1, 1}};
    write_embedding_csv(dir / "e.csv", e);
    EXPECT_EQ(slurp(dir / "e.csv").substr(0, 24), "patient_id,z1,z2,z3,labe");
    const auto back = read_embedding_csv(dir / "e.csv");
    EXPECT_EQ(back.patient_ids, e.patient_ids);
    EXPECT_EQ(back.z, e.z);
    EXPECT_EQ(back.labels, e.labels);

    const auto tree = analysis::agglomerative_ward(test::random_matrix(6, 2, rng));
    write_linkage_csv(dir / "l.csv", tree);
    const auto t2 = read_linkage_csv(dir / "l.csv");
    EXPECT_EQ(t2.merges, tree.merges);
    EXPECT_EQ(t2.leaf_count, 6u);

    std::ofstream(dir / "broken.csv") << "step,left,right,distance,new_id,size\n0,0,1,0.5,9,2\n";
    EXPECT_THROW(read_linkage_csv(dir / "broken.csv"), FormatError);
}

TEST(Artifacts, ManifestDetectsStaleAndEditedFiles) {
    const auto dir = scratch("manifest");
    {
        Workspace ws(dir, "aaaa", 1);
        write_json(ws.path("x.json"), json{{"v", 1}});
        ws.record("x.json", "stage");
        EXPECT_TRUE(ws.fresh("x.json"));
        EXPECT_NO_THROW(ws.require("x.json", "stage"));
        EXPECT_THROW(ws.require("y.json", "make-y"), MissingArtifact);
    }
    {
        Workspace other(dir, "bbbb", 1);
        EXPECT_NE(other.problem("x.json").find("different configuration"), std::string::npos);
    }
    Workspace ws(dir, "aaaa", 1);
    std::ofstream(ws.path("x.json"), std::ios::app) << " ";
    EXPECT_NE(ws.problem("x.json").find("modified"), std::string::npos);
}

TEST(Pipeline, EvaluateBeforeTrainNamesTheMissingCommand) {
    const auto dir = scratch("order");
    Pipeline p(quick_config(dir));
    try {
        p.evaluate();
        FAIL() << "expected MissingArtifact";
    } catch (const MissingArtifact& e) {
        EXPECT_NE(std::string(e.what()).find("run `preprocess` first"), std::string::npos) << e.what();
    }
    p.synth();
    p.preprocess();
    try {
        p.evaluate();
        FAIL() << "expected MissingArtifact";
    } catch (const MissingArtifact& e) {
        EXPECT_NE(std::string(e.what()).find("run `train` first"), std::string::npos) << e.what();
    }
}

TEST(Pipeline, FullRunWritesEveryArtifact) {
    const auto dir = scratch("full");
    Pipeline p(quick_config(dir));
    p.synth();
    p.preprocess();
    p.train(model::Variant::dsec);
    const auto metrics = p.evaluate();
    for (const char* key : {"auc_dsec", "auc_dec_rf", "auc_pca_rf", "auc_dsec_phase2", "fingerprint", "seed"}) {
        EXPECT_TRUE(metrics.contains(key)) << key;
    }
    p.embed(model::Variant::dsec);
    p.cluster(model::Variant::dsec);
    p.enrich(model::Variant::dsec);
    p.report();
    for (const char* f : {"admissions.csv", "subgroups.csv", "matrix.csv", "split.csv", "preprocess.json",
                          "model_dsec.ckpt", "model_dec.ckpt", "training_dsec.json", "metrics.json", "roc.svg",
                          "embedding_dsec.csv", "linkage_dsec.csv", "clusters_dsec.csv", "pca_dsec.svg",
                          "enrichment_dsec.csv", "enrichment_dsec.txt", "report.md", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    const auto manifest = read_json(dir / "manifest.json");
    EXPECT_EQ(manifest["fingerprint"], fingerprint(p.config()));
    EXPECT_EQ(manifest["seed"], 3);
    EXPECT_EQ(manifest["artifacts"]["metrics.json"]["stage"], "evaluate");

    const auto training = read_json(dir / "training_dsec.json");
    EXPECT_EQ(training["loss"]["pretrain"].size(), 3u);
    EXPECT_EQ(training["loss"]["transfer"].size(), 2u);
    EXPECT_EQ(training["loss"]["cluster"].size(), 3u);

    // The checkpoint reproduces the encoder's embedding.
    const auto model = from_checkpoint(model::load_checkpoint(dir / "model_dsec.ckpt"), p.config());
    const auto e = read_embedding_csv(dir / "embedding_dsec.csv");
    const auto m = cohort::read_matrix_csv(dir / "matrix.csv");
    EXPECT_EQ(model::encode(model.encoder, model.standardizer.transform(m)), e.z);
    EXPECT_EQ(slurp(dir / "report.md").find("refus"), std::string::npos);
}

TEST(Pipeline, ReportRefusesMixedConfigurations) {
    const auto dir = scratch("mixed");
    {
        Pipeline p(quick_config(dir, 3));
        p.synth();
        p.preprocess();
        p.train(model::Variant::dsec);
        p.evaluate();
    }
    Pipeline q(quick_config(dir, 4));
    q.synth();  // new admissions, everything downstream still from seed 3
    EXPECT_THROW(q.report(), MissingArtifact);
}

TEST(Pipeline, SynthRequiresSyntheticSource) {
    auto c = quick_config(scratch("csv"));
    c.data.source = "csv";
    c.data.path = "/nonexistent.csv";
    Pipeline p(c);
    EXPECT_THROW(p.synth(), ConfigError);
}
