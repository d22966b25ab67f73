#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pipeline.hpp"
#include "run_config.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::string method = "dsec";
    std::optional<std::size_t> k;
    std::optional<std::size_t> depth;
};

dsec::cli::RunConfig resolve(const Flags& f) {
    dsec::cli::RunConfig config;
    if (!f.config.empty()) config = dsec::cli::load_config(f.config, config);
    if (f.seed) config.seed = *f.seed;
    if (f.out) config.output_dir = *f.out;
    if (f.k) config.k = *f.k;
    if (f.depth) config.enrichment.depth = *f.depth;
    dsec::cli::validate_config(config);
    return config;
}

} // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("dsec");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL=debug|info|warn|error|off

    CLI::App app{"Semi-supervised embedded clustering of patient records"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags flags;
    app.add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", flags.seed, "Master seed (overrides the config)");
    app.add_option("--out", flags.out, "Output directory (overrides the config)");
    app.add_option("--k", flags.k, "Number of clusters (overrides the config)");
    app.add_option("--depth", flags.depth, "Enrichment hierarchy depth (overrides the config)");

    const auto method_option = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--method", flags.method, "dec or dsec")->check(CLI::IsMember({"dec", "dsec"}));
        if (required) opt->required();
    };

    auto* synth = app.add_subcommand("synth", "Write a synthetic admissions cohort");
    auto* preprocess = app.add_subcommand("preprocess", "Aggregate, filter, match and split the cohort");
    auto* train = app.add_subcommand("train", "Train DEC or DSEC and save a checkpoint");
    method_option(train, true);
    auto* embed = app.add_subcommand("embed", "Embed every patient with a trained encoder");
    method_option(embed, false);
    auto* cluster = app.add_subcommand("cluster", "Ward linkage tree and cluster assignments of the embedding");
    method_option(cluster, false);
    auto* enrich = app.add_subcommand("enrich", "Diagnosis-code enrichment down the linkage tree");
    method_option(enrich, false);
    auto* evaluate = app.add_subcommand("evaluate", "Held-out ROC of DSEC, DEC + forest and PCA + forest");
    auto* report = app.add_subcommand("report", "Summarize the run as markdown");
    auto* selftest = app.add_subcommand("selftest", "Gradient checks and brute-force oracle suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (selftest->parsed()) {
            const auto config = resolve(flags);
            return dsec::cli::run_selftest(config.seed, std::cout) ? EXIT_SUCCESS : EXIT_FAILURE;
        }
        dsec::cli::Pipeline pipeline(resolve(flags));
        const auto variant = dsec::cli::variant_from_name(flags.method);
        if (synth->parsed()) pipeline.synth();
        if (preprocess->parsed()) pipeline.preprocess();
        if (train->parsed()) pipeline.train(variant);
        if (embed->parsed()) pipeline.embed(variant);
        if (cluster->parsed()) pipeline.cluster(variant);
        if (enrich->parsed()) pipeline.enrich(variant);
        if (evaluate->parsed()) {
            const auto metrics = pipeline.evaluate();
            std::cout << "auc_dsec " << metrics["auc_dsec"] << "\nauc_dec_rf " << metrics["auc_dec_rf"]
                      << "\nauc_pca_rf " << metrics["auc_pca_rf"] << '\n';
        }
        if (report->parsed()) pipeline.report();
    } catch (const dsec::cli::ConfigError& e) {
        spdlog::error("invalid configuration:");
        for (const auto& p : e.problems()) spdlog::error("  {}", p);
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
