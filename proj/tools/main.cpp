// fscil: few-shot class-incremental learning pipeline driver.
//
// Verbs: pretrain, transfer, eval, run, sweep, baseline, table.
// Config precedence: --set overrides > config file > built-in defaults.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fscil/errors.hpp"
#include "fscil/harness.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
    std::string out_dir;
    bool overwrite = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Config file (JSON)");
    cmd->add_option("--set", args.overrides, "Override a config field: key=value");
    cmd->add_option("--out", args.out_dir, "Output directory (overrides out_dir)");
    cmd->add_flag("--overwrite", args.overwrite, "Discard an existing run directory");
}

fscil::ExperimentConfig build_config(const CommonArgs& args) {
    json j = json::object();
    if (!args.config_path.empty()) {
        // Reparse through the resolved form so --set sees every field.
        j = fscil::config_to_json(fscil::load_config_file(args.config_path));
    } else {
        j = fscil::config_to_json(fscil::config_from_json(json::object()));
    }
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw fscil::InvalidConfig("--set needs key=value, got: " + kv);
        fscil::set_config_path(j, kv.substr(0, eq), kv.substr(eq + 1));
    }
    fscil::ExperimentConfig cfg = fscil::config_from_json(j);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    return cfg;
}

int run_pipeline(const CommonArgs& args, const std::string& stop_after) {
    fscil::RunOptions opts;
    opts.overwrite = args.overwrite;
    opts.stop_after = stop_after;
    const fscil::RunManifest manifest = fscil::run_experiment(build_config(args), opts);
    std::cout << "run complete: " << manifest.out_dir << '\n';
    if (!manifest.summary_path.empty()) {
        const fscil::EvalSummary s = fscil::read_summary_file(manifest.summary_path);
        fscil::emit_results_table({s}, {"run"}, "aligned", std::cout);
    }
    return 0;
}

std::vector<json> parse_values(const std::string& csv) {
    std::vector<json> values;
    std::istringstream in(csv);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        try {
            values.push_back(json::parse(cell));
        } catch (const json::exception&) {
            values.push_back(cell);
        }
    }
    if (values.empty()) throw fscil::InvalidConfig("--values is empty");
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"few-shot class-incremental learning pipeline"};
    app.require_subcommand(1);

    CommonArgs run_args, pre_args, tr_args, eval_args, sweep_args, base_args;
    std::string run_stop_after;

    CLI::App* run_cmd = app.add_subcommand("run", "Full pipeline: pretrain, transfer, eval");
    add_common(run_cmd, run_args);
    run_cmd->add_option("--stop-after", run_stop_after,
                        "Stop after a stage (pretrain | transfer)");

    CLI::App* pre_cmd = app.add_subcommand("pretrain", "Base-session training only");
    add_common(pre_cmd, pre_args);

    CLI::App* tr_cmd = app.add_subcommand("transfer",
                                          "Complementary training (runs pretrain if needed)");
    add_common(tr_cmd, tr_args);

    CLI::App* eval_cmd = app.add_subcommand("eval",
                                            "Incremental evaluation (runs earlier stages if needed)");
    add_common(eval_cmd, eval_args);

    std::string sweep_axis, sweep_values;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "One run per value of a config field");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--axis", sweep_axis, "Config field, bare or dotted")->required();
    sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")->required();

    std::string baseline_kind = "ncm";
    CLI::App* base_cmd = app.add_subcommand("baseline", "ncm or joint-cnn reference run");
    add_common(base_cmd, base_args);
    base_cmd->add_option("--kind", baseline_kind, "ncm | joint-cnn");

    std::vector<std::string> table_inputs, table_names;
    std::string table_format = "aligned", table_out;
    CLI::App* table_cmd = app.add_subcommand("table", "Collate summary.json files");
    table_cmd->add_option("--inputs", table_inputs, "summary.json paths")->required();
    table_cmd->add_option("--names", table_names, "Row labels (default: file paths)");
    table_cmd->add_option("--format", table_format, "csv | aligned");
    table_cmd->add_option("--out", table_out, "Write to file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return run_pipeline(run_args, run_stop_after);
        if (*pre_cmd) return run_pipeline(pre_args, "pretrain");
        if (*tr_cmd) return run_pipeline(tr_args, "transfer");
        if (*eval_cmd) return run_pipeline(eval_args, "");

        if (*sweep_cmd) {
            const auto manifests = fscil::run_sweep(
                build_config(sweep_args), sweep_axis, parse_values(sweep_values),
                fscil::RunOptions{sweep_args.overwrite, ""});
            std::cout << "sweep complete: " << manifests.size() << " runs\n";
            return 0;
        }

        if (*base_cmd) {
            fscil::ExperimentConfig cfg = build_config(base_args);
            const std::string out = base_args.out_dir.empty()
                                        ? cfg.out_dir + "/baseline-" + baseline_kind
                                        : base_args.out_dir;
            fscil::EvalSummary summary;
            if (baseline_kind == "ncm")
                summary = fscil::run_ncm_baseline(cfg, out);
            else if (baseline_kind == "joint-cnn")
                summary = fscil::run_joint_baseline(cfg, out);
            else
                throw fscil::InvalidConfig("baseline kind must be ncm or joint-cnn");
            fscil::emit_results_table({summary}, {baseline_kind}, "aligned", std::cout);
            return 0;
        }

        if (*table_cmd) {
            std::vector<fscil::EvalSummary> summaries;
            for (const auto& p : table_inputs)
                summaries.push_back(fscil::read_summary_file(p));
            std::vector<std::string> names =
                table_names.empty() ? table_inputs : table_names;
            if (table_out.empty()) {
                fscil::emit_results_table(summaries, names, table_format, std::cout);
            } else {
                std::ostringstream buf;
                fscil::emit_results_table(summaries, names, table_format, buf);
                std::ofstream file(table_out, std::ios::trunc);
                if (!file) throw fscil::IoError("cannot write " + table_out);
                file << buf.str();
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
