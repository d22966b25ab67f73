#include "pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dsec/analysis/linkage.hpp"
#include "dsec/analysis/pca.hpp"
#include "dsec/cohort/admissions.hpp"
#include "dsec/cohort/csv.hpp"
#include "dsec/cohort/propensity.hpp"
#include "dsec/cohort/synthetic.hpp"
#include "dsec/eval/svg.hpp"
#include "dsec/model/checkpoint.hpp"
#include "dsec/selftest/suites.hpp"

namespace dsec::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string variant_name(model::Variant v) { return v == model::Variant::dsec ? "dsec" : "dec"; }

model::Variant variant_from_name(const std::string& name) {
    if (name == "dsec") return model::Variant::dsec;
    if (name == "dec") return model::Variant::dec;
    throw ConfigError({fmt::format("method '{}' is not dec or dsec", name)});
}

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    return out;
}

std::vector<double> to_doubles(const std::vector<bool>& v) { return {v.begin(), v.end()}; }

std::vector<bool> to_bools(const std::vector<double>& v) {
    std::vector<bool> out;
    for (double x : v) out.push_back(x != 0.0);
    return out;
}

const std::vector<double>& vector_of(const model::Checkpoint& c, const std::string& name) {
    const auto it = c.vectors.find(name);
    if (it == c.vectors.end()) throw FormatError(fmt::format("checkpoint lacks vector '{}'", name));
    return it->second;
}

const std::vector<DenseLayer>& stack_of(const model::Checkpoint& c, const std::string& name) {
    const auto it = c.stacks.find(name);
    if (it == c.stacks.end()) throw FormatError(fmt::format("checkpoint lacks stack '{}'", name));
    return it->second;
}

std::string attribute(const model::Checkpoint& c, const std::string& key) {
    const auto it = c.attributes.find(key);
    return it == c.attributes.end() ? std::string{} : it->second;
}

json curve_json(const eval::RocCurve& c) { return json{{"auc", c.auc}, {"fpr", c.fpr}, {"tpr", c.tpr}}; }

} // namespace

model::Checkpoint to_checkpoint(const model::PhaseReport& report, const cohort::Standardizer& standardizer,
                                model::Variant variant, const std::string& fingerprint, std::uint64_t seed) {
    model::Checkpoint c;
    c.attributes["method"] = variant_name(variant);
    c.attributes["phase"] = "cluster";
    c.attributes["fingerprint"] = fingerprint;
    c.attributes["seed"] = std::to_string(seed);
    c.vectors["standardizer.mean"] = standardizer.mean;
    c.vectors["standardizer.scale"] = standardizer.scale;
    c.vectors["standardizer.zero_variance"] = to_doubles(standardizer.zero_variance);
    c.vectors["loss.pretrain"] = report.pretrain_loss;
    c.vectors["loss.transfer"] = report.transfer_loss;
    c.vectors["loss.cluster"] = report.cluster_loss;
    c.stacks["encoder"] = report.final_encoder.layers;
    c.stacks["pretrain_encoder"] = report.autoencoder.encoder.layers;
    c.stacks["decoder"] = report.autoencoder.decoder;
    if (report.transfer_encoder) c.stacks["transfer_encoder"] = report.transfer_encoder->layers;
    if (report.classifier) c.stacks["classifier"] = {report.classifier->layer};
    c.cluster_head = report.cluster_head;
    return c;
}

TrainedModel from_checkpoint(const model::Checkpoint& c, const RunConfig& config) {
    TrainedModel m;
    m.variant = variant_from_name(attribute(c, "method"));
    m.standardizer.mean = vector_of(c, "standardizer.mean");
    m.standardizer.scale = vector_of(c, "standardizer.scale");
    m.standardizer.zero_variance = to_bools(vector_of(c, "standardizer.zero_variance"));
    const auto& layers = stack_of(c, "encoder");
    if (layers.empty()) throw FormatError("checkpoint encoder is empty");
    const auto spec = config.model.spec(layers.front().in_dim(), m.variant);
    m.encoder = {layers, spec};
    if (m.variant == model::Variant::dsec) {
        m.transfer_encoder = model::EncoderModel{stack_of(c, "transfer_encoder"), spec};
        const auto& head = stack_of(c, "classifier");
        if (head.size() != 1) throw FormatError("checkpoint classifier must hold one layer");
        m.classifier = model::ClassifierHead{head.front()};
    }
    if (!c.cluster_head) throw FormatError("checkpoint lacks cluster centroids");
    m.cluster_head = *c.cluster_head;
    return m;
}

Pipeline::Pipeline(RunConfig config)
    : config_(std::move(config)), fingerprint_(fingerprint(config_)), ws_(config_.output_dir, fingerprint_, config_.seed) {
    write_json(ws_.path("run_config.json"), config_to_json(config_));
    ws_.record("run_config.json", "config");
}

void Pipeline::synth() {
    if (config_.data.source != "synthetic") {
        throw ConfigError({"synth needs data.source = \"synthetic\""});
    }
    const auto spec = config_.synthetic_spec();
    const auto m = cohort::generate_synthetic_cohort(spec);
    const auto records = cohort::to_admissions(m, eval::stream_seed(config_.seed, "admissions"));
    {
        auto out = open_out(ws_.path("admissions.csv"));
        cohort::write_admissions(out, records);
    }
    ws_.record("admissions.csv", "synth");
    {
        auto out = open_out(ws_.path("subgroups.csv"));
        out << "patient_id,subgroup,label\n";
        for (std::size_t r = 0; r < m.rows(); ++r) {
            out << m.patient_ids[r] << ',' << spec.subgroups[static_cast<std::size_t>(m.subgroup[r])].name << ','
                << m.labels[r] << '\n';
        }
    }
    ws_.record("subgroups.csv", "synth");
    spdlog::info("synth: {} patients, {} admissions", m.rows(), records.size());
}

void Pipeline::preprocess() {
    fs::path source;
    if (config_.data.source == "csv") {
        source = config_.data.path;
    } else {
        ws_.require("admissions.csv", "synth");
        source = ws_.path("admissions.csv");
    }
    const auto load = cohort::load_admissions(source);
    for (const auto& e : load.errors) spdlog::warn("{} line {}: {}", source.string(), e.line, e.message);
    if (load.records.empty()) throw FormatError(fmt::format("{}: no usable admissions", source.string()));

    const auto features = cohort::default_feature_names();
    const auto selected = cohort::aggregate_and_select(load.records, features);
    const auto raw = cohort::build_patient_matrix(selected, features);

    cohort::FilterReport filter_report;
    auto m = cohort::filter_features_and_cases(raw, config_.preprocess.filter, &filter_report);
    const std::size_t after_filter = m.rows();

    json matching = nullptr;
    if (config_.preprocess.propensity_match) {
        Rng rng(eval::stream_seed(config_.seed, "propensity"));
        cohort::MatchResult match;
        m = cohort::match_cohort(m, rng, &match);
        matching = json{{"unmatched_cases", match.unmatched_cases}, {"matched_controls", match.matched_controls.size()}};
        if (match.unmatched_cases > 0) spdlog::warn("preprocess: {} cases left unmatched", match.unmatched_cases);
    }

    cohort::SplitSpec split_spec = config_.split;
    split_spec.seed = eval::split_seed(config_.seed);
    const auto split = cohort::stratified_split(m.labels, split_spec);

    {
        auto out = open_out(ws_.path("matrix.csv"));
        cohort::write_matrix_csv(out, m);
    }
    ws_.record("matrix.csv", "preprocess");
    write_split_csv(ws_.path("split.csv"), m, split);
    ws_.record("split.csv", "preprocess");

    const auto cases = static_cast<std::size_t>(std::count(m.labels.begin(), m.labels.end(), 1));
    json summary{
        {"fingerprint", fingerprint_},
        {"seed", config_.seed},
        {"source", source.string()},
        {"admissions", load.records.size()},
        {"row_errors", load.errors.size()},
        {"patients", raw.rows()},
        {"after_filter", after_filter},
        {"dropped_features", filter_report.dropped_features},
        {"dropped_patients", filter_report.dropped_patients.size()},
        {"matching", matching},
        {"rows", m.rows()},
        {"cases", cases},
        {"controls", m.rows() - cases},
        {"features", m.feature_names},
        {"n_train", split.train.size()},
        {"n_test", split.test.size()},
    };
    write_json(ws_.path("preprocess.json"), summary);
    ws_.record("preprocess.json", "preprocess");
    spdlog::info("preprocess: {} patients ({} cases), {} features, {} train / {} test", m.rows(), cases, m.cols(),
                 split.train.size(), split.test.size());
}

Pipeline::Cohort Pipeline::load_cohort() const {
    ws_.require("matrix.csv", "preprocess");
    ws_.require("split.csv", "preprocess");
    Cohort c;
    c.matrix = cohort::read_matrix_csv(ws_.path("matrix.csv"));
    c.split = read_split_csv(ws_.path("split.csv"), c.matrix);
    return c;
}

void Pipeline::train_and_save(model::Variant variant, const Cohort& c) {
    const auto name = variant_name(variant);
    const auto data = eval::prepare_data(c.matrix, c.split.train, c.split.test);
    const auto standardizer = cohort::Standardizer::fit(c.matrix, c.split.train);
    spdlog::info("train {}: {} rows, {} features", name, data.train.rows(), data.train.cols());
    const auto report = eval::train_variant(variant, data.train, data.y_train, config_.comparison(), config_.seed);

    model::save_checkpoint(ws_.path(ckpt_name(variant)),
                           to_checkpoint(report, standardizer, variant, fingerprint_, config_.seed));
    ws_.record(ckpt_name(variant), "train");

    json summary{
        {"fingerprint", fingerprint_},
        {"seed", config_.seed},
        {"method", name},
        {"epochs",
         {{"pretrain", report.pretrain_loss.size()},
          {"transfer", report.transfer_loss.size()},
          {"cluster", report.cluster_loss.size()}}},
        {"loss",
         {{"pretrain", report.pretrain_loss}, {"transfer", report.transfer_loss}, {"cluster", report.cluster_loss}}},
        {"stopped_early", report.stopped_early},
        {"label_agreement", report.label_agreement ? json(*report.label_agreement) : json(nullptr)},
    };
    write_json(ws_.path("training_" + name + ".json"), summary);
    ws_.record("training_" + name + ".json", "train");
    if (!report.cluster_loss.empty()) {
        spdlog::info("train {}: KL {:.6g} -> {:.6g}", name, report.cluster_loss.front(), report.cluster_loss.back());
    }
}

void Pipeline::train(model::Variant variant) { train_and_save(variant, load_cohort()); }

TrainedModel Pipeline::load_model(model::Variant variant) const {
    ws_.require(ckpt_name(variant), "train", "dsec train --method " + variant_name(variant));
    return from_checkpoint(model::load_checkpoint(ws_.path(ckpt_name(variant))), config_);
}

void Pipeline::embed(model::Variant variant) {
    const auto c = load_cohort();
    const auto model = load_model(variant);
    if (model.standardizer.mean.size() != c.matrix.cols()) {
        throw ShapeError(fmt::format("checkpoint expects {} features, matrix has {}", model.standardizer.mean.size(),
                                     c.matrix.cols()));
    }
    Embedding e;
    e.patient_ids = c.matrix.patient_ids;
    e.labels = c.matrix.labels;
    e.z = model::encode(model.encoder, model.standardizer.transform(c.matrix));
    const auto name = "embedding_" + variant_name(variant) + ".csv";
    write_embedding_csv(ws_.path(name), e);
    ws_.record(name, "embed");
    spdlog::info("embed {}: {} x {}", variant_name(variant), e.z.rows(), e.z.cols());
}

void Pipeline::cluster(model::Variant variant) {
    const auto name = variant_name(variant);
    ws_.require("embedding_" + name + ".csv", "embed", "dsec embed --method " + name);
    const auto model = load_model(variant);
    const auto e = read_embedding_csv(ws_.path("embedding_" + name + ".csv"));
    if (e.z.rows() < 2) throw DomainError("cluster needs at least two embedded patients");

    const auto tree = analysis::agglomerative_ward(e.z);
    write_linkage_csv(ws_.path("linkage_" + name + ".csv"), tree);
    ws_.record("linkage_" + name + ".csv", "cluster");

    const auto ward = analysis::cut_tree(tree, std::min(config_.k, e.z.rows()));
    const auto q = model::soft_assign(e.z, model.cluster_head);
    const auto soft = model::hard_assignments(q);
    {
        auto out = open_out(ws_.path("clusters_" + name + ".csv"));
        out << "patient_id,label,ward_cluster,soft_cluster,confidence\n";
        for (std::size_t i = 0; i < e.z.rows(); ++i) {
            out << cohort::csv_escape(e.patient_ids[i]) << ',' << e.labels[i] << ',' << ward.labels[i] << ',' << soft[i]
                << ',' << cohort::format_double(q(i, soft[i])) << '\n';
        }
    }
    ws_.record("clusters_" + name + ".csv", "cluster");

    const auto projection = analysis::pca(e.z, std::min<std::size_t>(2, e.z.cols())).projection;
    {
        auto out = open_out(ws_.path("pca_" + name + ".svg"));
        eval::write_scatter_svg(out, projection, e.labels, fmt::format("{} embedding, first two principal axes", name));
    }
    ws_.record("pca_" + name + ".svg", "cluster");
    spdlog::info("cluster {}: {} merges", name, tree.merges.size());
}

void Pipeline::enrich(model::Variant variant) {
    const auto name = variant_name(variant);
    ws_.require("linkage_" + name + ".csv", "cluster", "dsec cluster --method " + name);
    ws_.require("embedding_" + name + ".csv", "embed", "dsec embed --method " + name);
    const auto c = load_cohort();
    const auto e = read_embedding_csv(ws_.path("embedding_" + name + ".csv"));
    const auto tree = read_linkage_csv(ws_.path("linkage_" + name + ".csv"));
    if (tree.leaf_count != e.z.rows()) throw ShapeError("linkage and embedding disagree on the number of patients");

    std::map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < c.matrix.rows(); ++r) row_of[c.matrix.patient_ids[r]] = r;
    std::vector<analysis::CodeSet> codes;
    for (const auto& id : e.patient_ids) {
        const auto it = row_of.find(id);
        if (it == row_of.end()) throw FormatError(fmt::format("embedded patient '{}' is not in matrix.csv", id));
        codes.push_back(c.matrix.codes[it->second]);
    }

    const auto reports = analysis::hierarchical_enrichment(tree, codes, config_.enrichment);
    {
        auto out = open_out(ws_.path("enrichment_" + name + ".csv"));
        analysis::write_enrichment_csv(out, reports);
    }
    ws_.record("enrichment_" + name + ".csv", "enrich");
    {
        auto out = open_out(ws_.path("enrichment_" + name + ".txt"));
        analysis::write_enrichment_table(out, reports);
    }
    ws_.record("enrichment_" + name + ".txt", "enrich");

    std::size_t significant = 0;
    for (const auto& r : reports)
        for (const auto& rec : r.records) significant += rec.significant ? 1 : 0;
    spdlog::info("enrich {}: {} merges examined, {} significant codes", name, reports.size(), significant);
}

json Pipeline::evaluate() {
    const auto c = load_cohort();
    const auto dsec = load_model(model::Variant::dsec);
    if (!ws_.fresh(ckpt_name(model::Variant::dec))) {
        spdlog::info("evaluate: no current DEC checkpoint, training one");
        train_and_save(model::Variant::dec, c);
    }
    const auto dec = load_model(model::Variant::dec);
    const auto config = config_.comparison();
    const auto data = eval::prepare_data(c.matrix, c.split.train, c.split.test);

    eval::MethodResults r;
    r.dsec = eval::roc_auc(eval::classifier_scores(dsec.encoder, *dsec.classifier, data.test), data.y_test);
    r.dsec_phase2 =
        eval::roc_auc(eval::classifier_scores(*dsec.transfer_encoder, *dsec.classifier, data.test), data.y_test);
    r.dec_rf = eval::roc_auc(eval::embedding_forest_scores(dec.encoder, data, config, config_.seed), data.y_test);
    r.pca_rf = eval::roc_auc(eval::pca_forest_scores(data, config, config_.seed), data.y_test);

    json folds = json::array();
    if (config_.cross_validate) {
        for (std::size_t f = 0; f < c.split.folds.size(); ++f) {
            const auto [fit_rows, val_rows] = c.split.fold(f);
            const auto fr = eval::evaluate_methods(eval::prepare_data(c.matrix, fit_rows, val_rows), config,
                                                   eval::stream_seed(config_.seed, fmt::format("fold.{}", f)));
            folds.push_back(json{{"fold", f},
                                 {"auc_dsec", fr.dsec.auc},
                                 {"auc_dec_rf", fr.dec_rf.auc},
                                 {"auc_pca_rf", fr.pca_rf.auc}});
            spdlog::info("evaluate: fold {} done", f);
        }
    }

    json metrics{
        {"fingerprint", fingerprint_},
        {"seed", config_.seed},
        {"n_train", data.y_train.size()},
        {"n_test", data.y_test.size()},
        {"auc_dsec", r.dsec.auc},
        {"auc_dsec_phase2", r.dsec_phase2.auc},
        {"auc_dec_rf", r.dec_rf.auc},
        {"auc_pca_rf", r.pca_rf.auc},
        {"reference_auc",
         {{"auc_dsec", eval::kReferenceAucDsec},
          {"auc_dec_rf", eval::kReferenceAucDecRf},
          {"auc_pca_rf", eval::kReferenceAucPcaRf}}},
        {"folds", folds},
        {"roc",
         {{"dsec", curve_json(r.dsec)},
          {"dsec_phase2", curve_json(r.dsec_phase2)},
          {"dec_rf", curve_json(r.dec_rf)},
          {"pca_rf", curve_json(r.pca_rf)}}},
    };
    write_json(ws_.path("metrics.json"), metrics);
    ws_.record("metrics.json", "evaluate");

    const std::vector<eval::NamedCurve> curves{{"DSEC", r.dsec},
                                               {"DSEC (after transfer)", r.dsec_phase2},
                                               {"DEC + forest", r.dec_rf},
                                               {"PCA + forest", r.pca_rf}};
    {
        auto out = open_out(ws_.path("roc.svg"));
        eval::write_roc_svg(out, curves, "Held-out ROC");
    }
    ws_.record("roc.svg", "evaluate");
    spdlog::info("evaluate: AUC dsec {:.4f}, dec+rf {:.4f}, pca+rf {:.4f}", r.dsec.auc, r.dec_rf.auc, r.pca_rf.auc);
    return metrics;
}

void Pipeline::report() {
    // Every artifact the manifest knows about must come from this
    // configuration, and self-describing ones must agree internally.
    std::vector<std::string> stale;
    for (const auto& [name, entry] : ws_.manifest()["artifacts"].items()) {
        if (!fs::exists(ws_.path(name))) continue;
        if (const auto why = ws_.problem(name); !why.empty()) stale.push_back(fmt::format("{} {}", name, why));
    }
    const auto embedded = [&](const std::string& name) {
        if (!fs::exists(ws_.path(name))) return;
        std::string fp;
        if (name.ends_with(".json")) {
            fp = read_json(ws_.path(name)).value("fingerprint", "");
        } else {
            fp = attribute(model::load_checkpoint(ws_.path(name)), "fingerprint");
        }
        if (fp != fingerprint_) stale.push_back(fmt::format("{} carries fingerprint {}", name, fp));
    };
    for (const char* name : {"metrics.json", "preprocess.json", "training_dsec.json", "training_dec.json",
                             "model_dsec.ckpt", "model_dec.ckpt"})
        embedded(name);
    if (!stale.empty()) {
        std::string msg = fmt::format("refusing to report: artifacts do not match configuration {}", fingerprint_);
        for (const auto& s : stale) msg += "\n  " + s;
        throw MissingArtifact(msg);
    }
    ws_.require("metrics.json", "evaluate");

    const auto metrics = read_json(ws_.path("metrics.json"));
    auto out = open_out(ws_.path("report.md"));
    out << "# DSEC run report\n\n";
    out << fmt::format("- configuration fingerprint: `{}`\n- seed: {}\n", fingerprint_, config_.seed);
    if (fs::exists(ws_.path("preprocess.json"))) {
        const auto p = read_json(ws_.path("preprocess.json"));
        out << fmt::format("- cohort: {} patients ({} cases, {} controls), {} features\n", p.value("rows", 0),
                           p.value("cases", 0), p.value("controls", 0), p["features"].size());
    }
    out << fmt::format("- split: {} train / {} test\n\n", metrics.value("n_train", 0), metrics.value("n_test", 0));

    out << "## Held-out AUC\n\n| method | AUC | reference |\n|---|---|---|\n";
    const auto& ref = metrics["reference_auc"];
    out << fmt::format("| DSEC | {:.4f} | {:.2f} |\n", metrics.value("auc_dsec", 0.0), ref.value("auc_dsec", 0.0));
    out << fmt::format("| DSEC after transfer only | {:.4f} | |\n", metrics.value("auc_dsec_phase2", 0.0));
    out << fmt::format("| DEC + forest | {:.4f} | {:.2f} |\n", metrics.value("auc_dec_rf", 0.0),
                       ref.value("auc_dec_rf", 0.0));
    out << fmt::format("| PCA + forest | {:.4f} | {:.2f} |\n\n", metrics.value("auc_pca_rf", 0.0),
                       ref.value("auc_pca_rf", 0.0));
    if (!metrics["folds"].empty()) {
        out << "Cross-validation folds:\n\n| fold | DSEC | DEC + forest | PCA + forest |\n|---|---|---|---|\n";
        for (const auto& f : metrics["folds"]) {
            out << fmt::format("| {} | {:.4f} | {:.4f} | {:.4f} |\n", f.value("fold", 0), f.value("auc_dsec", 0.0),
                               f.value("auc_dec_rf", 0.0), f.value("auc_pca_rf", 0.0));
        }
        out << '\n';
    }

    for (const char* method : {"dsec", "dec"}) {
        const auto training = ws_.path(fmt::format("training_{}.json", method));
        if (!fs::exists(training)) continue;
        const auto t = read_json(training);
        out << fmt::format("## Training ({})\n\n", method);
        for (const char* phase : {"pretrain", "transfer", "cluster"}) {
            const auto& loss = t["loss"][phase];
            if (loss.empty()) continue;
            out << fmt::format("- {}: {} epochs, loss {:.6g} -> {:.6g}\n", phase, loss.size(), loss.front().get<double>(),
                               loss.back().get<double>());
        }
        out << '\n';
        const auto table = ws_.path(fmt::format("enrichment_{}.txt", method));
        if (fs::exists(table)) {
            std::ifstream in(table, std::ios::binary);
            out << fmt::format("## Enriched codes ({})\n\n```\n", method) << in.rdbuf() << "```\n\n";
        }
    }
    out.close();
    ws_.record("report.md", "report");
    spdlog::info("report: {}", ws_.path("report.md").string());
}

bool run_selftest(std::uint64_t seed, std::ostream& out) {
    std::vector<selftest::SuiteResult> results = selftest::gradient_suite(seed);
    results.push_back(selftest::ward_suite(seed));
    results.push_back(selftest::kmeans_suite(seed));
    results.push_back(selftest::fisher_suite(seed));
    bool ok = true;
    for (const auto& r : results) {
        ok = ok && r.passed;
        out << fmt::format("{} {:<32} trials={:<5} failures={:<3} worst={:.3g} time={:.2f}s{}\n",
                           r.passed ? "PASS" : "FAIL", r.name, r.trials, r.failures, r.worst, r.seconds,
                           r.detail.empty() ? "" : "  " + r.detail);
    }
    return ok;
}

} // namespace dsec::cli
