#include <CLI11.hpp>

#include <iostream>

#include "csf/runner.hpp"

namespace {

// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
int run(int argc, char** argv) {
    CLI::App app{"Conv-like ScaleFusion time series transformer"};
    app.require_subcommand(1);

    std::string config_path;
    std::string checkpoint_path;
    std::vector<std::string> overrides;
    int length = 0;

    auto* pre = app.add_subcommand("pretrain", "self-supervised pretraining");
    pre->add_option("--config", config_path, "config file")->required();
    pre->add_option("--set", overrides, "override: section.key=value");

    auto* fin = app.add_subcommand("finetune", "task fine-tuning");
    fin->add_option("--config", config_path, "config file")->required();
    fin->add_option("--checkpoint", checkpoint_path, "pretrained checkpoint");
    fin->add_option("--set", overrides, "override: section.key=value");

    auto* ana = app.add_subcommand("analyze", "feature redundancy report");
    ana->add_option("--config", config_path, "config file")->required();
    ana->add_option("--checkpoint", checkpoint_path, "trained checkpoint");
    ana->add_option("--set", overrides, "override: section.key=value");

    auto* sch = app.add_subcommand("schedule", "print the pyramid schedule for a length");
    sch->add_option("--length", length, "series length")->required();
    sch->add_option("--config", config_path, "config file (defaults when omitted)");
    sch->add_option("--set", overrides, "override: section.key=value");

    CLI11_PARSE(app, argc, argv);

    if (pre->parsed()) {
        const csf::RunConfig cfg = csf::load_run_config(config_path, overrides);
        const csf::RunSummary s = csf::cmd_pretrain(cfg);
        std::cout << "checkpoint " << s.checkpoint_path << " hash " << s.checkpoint_hash << "\n";
    } else if (fin->parsed()) {
        const csf::RunConfig cfg = csf::load_run_config(config_path, overrides);
        const csf::RunSummary s = csf::cmd_finetune(cfg, checkpoint_path);
        std::cout << "checkpoint " << s.checkpoint_path << " hash " << s.checkpoint_hash << "\n";
    } else if (ana->parsed()) {
        const csf::RunConfig cfg = csf::load_run_config(config_path, overrides);
        const csf::RedundancyReport r = csf::cmd_analyze(cfg, checkpoint_path);
        std::cout << r.to_text();
    } else if (sch->parsed()) {
        csf::ModelConfig model;
        if (!config_path.empty())
            model = csf::load_run_config(config_path, overrides).model;
        std::cout << csf::describe_schedule(length, model);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const csf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const csf::ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const csf::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const csf::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
