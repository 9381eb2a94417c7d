#include "csf/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "csf/checkpoint.hpp"

namespace csf {

namespace {

using nlohmann::json;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::vector<Sample> synth_split(const RunConfig& cfg, const std::string& split, int count) {
    SynthConfig sc;
    sc.kind = cfg.data.synth_kind;
    sc.count = count;
    sc.min_len = cfg.data.min_len;
    sc.max_len = cfg.data.max_len;
    sc.horizon = cfg.data.synth_kind == "classes" ? 0 : cfg.data.horizon;
    sc.noise = cfg.data.noise;
    sc.ar_coeff = cfg.data.ar_coeff;
    sc.num_classes = cfg.data.classes;
    Rng rng(Rng::derive(cfg.train.seed, "synth-" + split));
    return synth_generate(sc, rng);
}

BuiltData build_ett(const RunConfig& cfg) {
    DatasetManifest manifest;
    manifest.format = "ett-csv";
    manifest.path = cfg.data.path;
    manifest.columns = cfg.data.columns;
    const std::vector<NamedSeries> channels = load_ett_csv(cfg.data.path, manifest);
    if (channels.empty()) throw DataError("ett csv has no feature columns");
    BuiltData out;
    for (const NamedSeries& ch : channels) {
        const SplitRanges ranges =
            chronological_split(static_cast<int64_t>(ch.values.size()), cfg.data.split);
        const auto window = [&](const IndexRange& r, const std::string& split) {
            Rng rng(Rng::derive(cfg.train.seed, "window-" + split + "-" + ch.name));
            return sliding_window_varlen(ch, r, cfg.data.min_len, cfg.data.max_len,
                                         cfg.data.horizon, cfg.data.anchor_stride, rng);
        };
        for (auto& s : window(ranges.train, "train")) out.train.push_back(std::move(s));
        for (auto& s : window(ranges.val, "val")) out.val.push_back(std::move(s));
        for (auto& s : window(ranges.test, "test")) out.test.push_back(std::move(s));
    }
    return out;
}

BuiltData build_ucr(const RunConfig& cfg) {
    if (cfg.data.train_path.empty() || cfg.data.test_path.empty())
        throw ConfigError("ucr data needs data.train_path and data.test_path");
    const std::vector<Sample> train_raw = load_ucr(cfg.data.train_path);
    const std::vector<Sample> test_raw = load_ucr(cfg.data.test_path);
    BuiltData out;
    Rng train_rng(Rng::derive(cfg.train.seed, "ucr-train"));
    Rng test_rng(Rng::derive(cfg.train.seed, "ucr-test"));
    for (const Sample& s : train_raw)
        out.train.push_back(subsample_ucr(s, cfg.data.min_len, train_rng, cfg.data.crop));
    for (const Sample& s : test_raw)
        out.test.push_back(subsample_ucr(s, cfg.data.min_len, test_rng, cfg.data.crop));
    // Validation carved from the training tail (the archive ships no val split).
    const size_t n_val = std::max<size_t>(1, out.train.size() / 5);
    if (out.train.size() > n_val) {
        out.val.assign(out.train.end() - n_val, out.train.end());
        out.train.resize(out.train.size() - n_val);
    } else {
        out.val = out.train;
    }
    return out;
}

}  // namespace

BuiltData build_datasets(const RunConfig& cfg) {
    if (cfg.data.kind == "synthetic") {
        BuiltData out;
        const int n = cfg.data.count;
        out.train = synth_split(cfg, "train", n);
        out.val = synth_split(cfg, "val", std::max(1, n / 4));
        out.test = synth_split(cfg, "test", std::max(1, n / 4));
        return out;
    }
    if (cfg.data.kind == "ett-csv") return build_ett(cfg);
    if (cfg.data.kind == "ucr") return build_ucr(cfg);
    throw ConfigError("unknown data.kind '" + cfg.data.kind + "'");
}

namespace {

json config_json(const RunConfig& cfg) {
    json j;
    j["model"] = {{"patch_len", cfg.model.patching.patch_len},
                  {"stride", cfg.model.patching.stride},
                  {"base_dim", cfg.model.patching.base_dim},
                  {"repatch_len", cfg.model.patching.repatch_len},
                  {"max_len", cfg.model.patching.max_len},
                  {"heads", cfg.model.num_heads},
                  {"d_ff", cfg.model.ff_dim},
                  {"encoder_depth", cfg.model.encoder_depth},
                  {"alpha", cfg.model.alpha}};
    j["data"] = {{"kind", cfg.data.kind},
                 {"synth_kind", cfg.data.synth_kind},
                 {"count", cfg.data.count},
                 {"noise", cfg.data.noise},
                 {"min_len", cfg.data.min_len},
                 {"max_len", cfg.data.max_len},
                 {"horizon", cfg.data.horizon},
                 {"classes", cfg.data.classes}};
    j["train"] = {{"seed", cfg.train.seed},
                  {"step_size", cfg.train.step_size},
                  {"epochs", cfg.train.epochs},
                  {"steps", cfg.train.steps},
                  {"batch", cfg.train.batch},
                  {"freeze_backbone", cfg.train.freeze_backbone},
                  {"weight_decay", cfg.train.weight_decay}};
    return j;
}

void write_summary(const RunConfig& cfg, const RunSummary& summary, const json& metrics,
                   const std::string& path) {
    json j;
    j["config"] = config_json(cfg);
    j["checkpoint"] = summary.checkpoint_path;
    j["checkpoint_hash"] = summary.checkpoint_hash;
    j["metrics"] = metrics;
    j["seed"] = cfg.train.seed;
    j["wall_clock_s"] = summary.wall_clock_s;
    std::ofstream os(path);
    if (!os) throw DataError("cannot write summary: " + path);
    os << j.dump(2) << "\n";
}

}  // namespace

RunSummary cmd_pretrain(const RunConfig& cfg) {
    const double t0 = now_seconds();
    std::filesystem::create_directories(cfg.out_dir);
    const BuiltData data = build_datasets(cfg);

    ModelParams params(cfg.model, Rng::derive(cfg.train.seed, "backbone"));

    std::ofstream log(cfg.out_dir + "/pretrain_log.jsonl");
    if (!log) throw DataError("cannot write log under " + cfg.out_dir);

    PretrainOptions opt;
    opt.steps = cfg.train.steps;
    opt.epochs = cfg.train.epochs;
    opt.batch = cfg.train.batch;
    opt.step_size = cfg.train.step_size;
    opt.weight_decay = cfg.train.weight_decay;
    opt.seed = cfg.train.seed;

    const int log_every = cfg.train.log_every;
    const auto on_step = [&](const StepRecord& r) {
        if (log_every > 0 && r.step % log_every == 0) {
            json j{{"step", r.step}, {"l_total", r.l_total}, {"l_recon", r.l_recon},
                   {"l_indep", r.l_indep}};
            log << j.dump() << "\n";
        }
    };
    const auto on_epoch = [&](const StepRecord& r) {
        json j{{"epoch", r.step}, {"l_total", r.l_total}, {"l_recon", r.l_recon},
               {"l_indep", r.l_indep}};
        log << j.dump() << "\n";
        std::cout << "epoch " << r.step << " l_total=" << r.l_total << " l_recon=" << r.l_recon
                  << " l_indep=" << r.l_indep << "\n";
    };

    const PretrainResult result = pretrain(params, data.train, opt, on_step, on_epoch);
    log.close();

    RunSummary summary;
    summary.checkpoint_path = cfg.out_dir + "/checkpoint.bin";
    const std::vector<Param*> plist = params.all_params();
    save_checkpoint(summary.checkpoint_path, cfg.model_echo(), plist);
    summary.checkpoint_hash = file_content_hash(summary.checkpoint_path);
    summary.wall_clock_s = now_seconds() - t0;

    json metrics;
    if (!result.steps.empty()) {
        metrics["first_step_l_total"] = result.steps.front().l_total;
        metrics["last_step_l_total"] = result.steps.back().l_total;
        metrics["last_epoch_l_recon"] = result.epochs.back().l_recon;
        metrics["last_epoch_l_indep"] = result.epochs.back().l_indep;
    }
    write_summary(cfg, summary, metrics, cfg.out_dir + "/summary.json");
    return summary;
}

RunSummary cmd_finetune(const RunConfig& cfg, const std::string& checkpoint_path) {
    const double t0 = now_seconds();
    std::filesystem::create_directories(cfg.out_dir);
    const BuiltData data = build_datasets(cfg);

    ModelParams params(cfg.model, Rng::derive(cfg.train.seed, "backbone"));
    if (checkpoint_path.empty()) {
        std::cerr << "warning: no checkpoint given; fine-tuning from a fresh backbone\n";
    } else {
        const std::string echo = read_checkpoint_config(checkpoint_path);
        if (echo != cfg.model_echo())
            throw ConfigError("checkpoint config does not match run config:\n--- checkpoint\n" +
                              echo + "--- run\n" + cfg.model_echo());
        const std::vector<Param*> plist = params.all_params();
        load_checkpoint(checkpoint_path, plist);
    }

    const bool is_forecast =
        !(cfg.data.kind == "ucr" || (cfg.data.kind == "synthetic" && cfg.data.synth_kind == "classes"));
    int classes = cfg.data.classes;
    if (cfg.data.kind == "ucr") {
        int max_label = 1;
        for (const Sample& s : data.train) max_label = std::max(max_label, s.label);
        for (const Sample& s : data.test) max_label = std::max(max_label, s.label);
        classes = max_label + 1;
    }
    TaskHeads heads(is_forecast ? TaskKind::forecast : TaskKind::classify,
                    is_forecast ? cfg.data.horizon : classes, cfg.model,
                    Rng::derive(cfg.train.seed, "heads"));

    std::ofstream log(cfg.out_dir + "/finetune_log.jsonl");
    if (!log) throw DataError("cannot write log under " + cfg.out_dir);
    const auto on_epoch = [&](const EpochMetrics& m) {
        json j{{"epoch", m.epoch}, {"split", m.split}, {"loss", m.loss},
               {"wall_time_s", m.wall_time_s}};
        if (is_forecast) {
            if (m.split != "train") {
                j["mse"] = m.mse;
                j["mae"] = m.mae;
            }
        } else if (m.split != "train") {
            j["accuracy"] = m.accuracy;
            j["macro_f1"] = m.macro_f1;
        }
        log << j.dump() << "\n";
        std::cout << "epoch " << m.epoch << " [" << m.split << "] loss=" << m.loss << "\n";
    };

    FinetuneOptions opt;
    opt.epochs = cfg.train.epochs;
    opt.batch = cfg.train.batch;
    opt.step_size = cfg.train.step_size;
    opt.weight_decay = cfg.train.weight_decay;
    opt.seed = cfg.train.seed;
    opt.freeze_backbone = cfg.train.freeze_backbone;

    const std::string best_path = cfg.out_dir + "/checkpoint_best.bin";
    std::vector<Param*> all = params.all_params();
    for (Param* p : heads.all_params()) all.push_back(p);
    const auto on_best = [&](int) { save_checkpoint(best_path, cfg.model_echo(), all); };

    const FinetuneResult result = finetune(params, heads, data.train, data.val, opt, on_epoch, on_best);

    EpochMetrics test = evaluate(params, heads, data.test, "test");
    test.epoch = cfg.train.epochs;
    on_epoch(test);
    log.close();

    RunSummary summary;
    summary.checkpoint_path = cfg.out_dir + "/checkpoint_final.bin";
    save_checkpoint(summary.checkpoint_path, cfg.model_echo(), all);
    summary.checkpoint_hash = file_content_hash(summary.checkpoint_path);
    summary.wall_clock_s = now_seconds() - t0;

    json metrics{{"best_epoch", result.best_epoch}, {"best_val", result.best_val}};
    if (is_forecast) {
        metrics["test_mse"] = test.mse;
        metrics["test_mae"] = test.mae;
    } else {
        metrics["test_accuracy"] = test.accuracy;
        metrics["test_macro_f1"] = test.macro_f1;
    }
    write_summary(cfg, summary, metrics, cfg.out_dir + "/summary.json");
    return summary;
}

RedundancyReport cmd_analyze(const RunConfig& cfg, const std::string& checkpoint_path) {
    std::filesystem::create_directories(cfg.out_dir);
    const BuiltData data = build_datasets(cfg);
    const std::vector<Sample>& eval = data.test.empty() ? data.train : data.test;
    if (eval.size() < 2) throw DataError("analyze needs at least 2 evaluation samples");

    ModelParams params(cfg.model, Rng::derive(cfg.train.seed, "backbone"));
    if (!checkpoint_path.empty()) {
        const std::string echo = read_checkpoint_config(checkpoint_path);
        if (echo != cfg.model_echo())
            throw ConfigError("checkpoint config does not match run config");
        const std::vector<Param*> plist = params.all_params();
        load_checkpoint(checkpoint_path, plist);
    } else {
        std::cerr << "warning: analyzing an untrained (randomly initialized) backbone\n";
    }

    const RepresentationExtract extract = extract_representation(params, eval);
    PairSampling pairs;
    pairs.seed = Rng::derive(cfg.train.seed, "pair-sampling");
    RedundancyReport report = redundancy_report(extract.rep, 16, pairs);

    std::ofstream os(cfg.out_dir + "/redundancy_report.txt");
    if (!os) throw DataError("cannot write report under " + cfg.out_dir);
    os << report.to_text();
    os << "representation_layer = " << extract.layer << "\n";
    os << "samples_total = " << extract.total_samples << "\n";
    return report;
}

std::string describe_schedule(int length, const ModelConfig& cfg) {
    const PyramidSchedule s = schedule(length, cfg.patching);
    std::ostringstream os;
    os << "T=" << s.input_len << " P0=" << s.initial_patches
       << " activated_layers=" << s.activated_layers << "\n";
    for (int l = 1; l <= s.activated_layers; ++l) {
        const LayerShape& shape = s.layers[l - 1];
        os << "  layer " << l << ": d=" << shape.channel_dim << " P=" << shape.patch_count
           << " pad=" << shape.pad_patches << "\n";
    }
    if (s.activated_layers > 0) {
        const LengthInterval iv = length_interval(s.activated_layers, cfg.patching);
        os << "  length interval for L=" << s.activated_layers << ": [" << iv.lo << ", " << iv.hi
           << "]\n";
    }
    return os.str();
}

}  // namespace csf
