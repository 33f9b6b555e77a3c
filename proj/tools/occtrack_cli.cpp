#include <occtrack/config.hpp>
#include <occtrack/runner.hpp>
#include <occtrack/synth.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace occtrack;

namespace {

TrackerConfig config_or_default(const std::string &path) {
    return path.empty() ? TrackerConfig{} : load_tracker_config(path);
}

void write_text(const std::string &path, const std::string &text) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path);
    }
    out << text;
}

int cmd_track(const std::string &seq_dir, const std::string &cfg_path, const std::string &frames_dir,
              const std::string &diag_path, const std::string &model_path, const std::string &traj_path,
              const std::string &json_path, bool no_handling) {
    const Sequence seq = load_sequence(seq_dir);
    TrackerConfig cfg = config_or_default(cfg_path);
    if (no_handling) {
        cfg.occlusion_handling = false;
    }
    std::ofstream diag;
    if (!diag_path.empty()) {
        diag.open(diag_path);
        if (!diag) {
            throw Error(ErrorCode::IoError, "cannot write " + diag_path);
        }
    }
    if (!frames_dir.empty()) {
        std::filesystem::create_directories(frames_dir);
    }
    const bool full_gt = seq.gt().size() == seq.size();
    const RunResult run = run_tracker(seq, cfg, [&](std::size_t i, const Image &frame, const FrameDiagnostics &d) {
        if (i > 0 && diag.is_open()) {
            diag << d.to_json() << '\n';
        }
        if (!frames_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "%04zu.png", i + 1);
            const BBox *gt = i < seq.gt().size() ? &seq.gt()[i] : nullptr;
            const std::string tag = i == 0 ? "init" : std::string(to_string(d.model));
            save_image(std::filesystem::path(frames_dir) / name, render_frame(frame, d.box, gt, tag));
        }
    });
    if (!traj_path.empty()) {
        write_boxes(traj_path, run.trajectory);
    }
    if (!model_path.empty()) {
        save_filter(model_path, *run.final_filter);
    }
    if (full_gt) {
        const EvalReport report = evaluate_run(run, seq);
        std::cout << report.to_table();
        if (!json_path.empty()) {
            write_text(json_path, report.to_json());
        }
    } else {
        std::printf("tracked %zu frames at %.1f fps (no full ground truth, evaluation skipped)\n", seq.size(),
                    run.fps);
    }
    return 0;
}

int cmd_eval(const std::string &traj_path, const std::string &gt_path, const std::string &json_path) {
    const EvalReport report = evaluate(read_boxes(traj_path), read_boxes(gt_path));
    std::cout << report.to_table();
    if (!json_path.empty()) {
        write_text(json_path, report.to_json());
    }
    return 0;
}

std::vector<double> parse_alphas(const std::string &s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        out.push_back(config_detail::to_double("alphas", tok));
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"occtrack: correlation-filter tracking with occlusion handling"};
    app.require_subcommand(1);

    std::string seq_dir, cfg_path, frames_dir, diag_path, model_path, traj_path, json_path;
    bool no_handling = false;
    auto *track = app.add_subcommand("track", "Track an OTB-style sequence directory");
    track->add_option("seq-dir", seq_dir, "Sequence directory")->required();
    track->add_option("--config", cfg_path, "key=value config file");
    track->add_option("--dump-frames", frames_dir, "Write annotated frames to this directory");
    track->add_option("--diag", diag_path, "Write per-frame diagnostics as JSON lines");
    track->add_option("--dump-model", model_path, "Write the final tracking filter blob");
    track->add_option("--out", traj_path, "Write the trajectory as x,y,w,h lines");
    track->add_option("--json", json_path, "Write the evaluation report as JSON");
    track->add_flag("--no-occlusion-handling", no_handling, "Always update the tracking filter");

    std::string spec_path, out_dir;
    std::uint64_t seed = 0;
    auto *synth = app.add_subcommand("synth", "Render a synthetic sequence");
    synth->add_option("spec", spec_path, "Synthetic spec (key=value)")->required();
    synth->add_option("--seed", seed, "Random seed")->required();
    synth->add_option("--out", out_dir, "Output sequence directory")->required();

    std::string eval_traj, eval_gt, eval_json;
    auto *eval = app.add_subcommand("eval", "Evaluate a trajectory against ground truth");
    eval->add_option("traj", eval_traj, "Trajectory file (x,y,w,h lines)")->required();
    eval->add_option("gt", eval_gt, "Ground-truth file (x,y,w,h lines)")->required();
    eval->add_option("--json", eval_json, "Write the report as JSON");

    std::string ablate_dir, ablate_cfg;
    auto *abl = app.add_subcommand("ablate", "Run with and without occlusion handling");
    abl->add_option("seq-dir", ablate_dir, "Sequence directory")->required();
    abl->add_option("--config", ablate_cfg, "key=value config file");

    std::vector<std::string> sweep_dirs;
    std::string alphas = "1,1.5,2,2.5,3.5,5,9", sweep_cfg;
    auto *sweep = app.add_subcommand("sweep-alpha", "Recovery score for each alpha");
    sweep->add_option("seq-dir", sweep_dirs, "Sequence directories")->required();
    sweep->add_option("--alphas", alphas, "Comma-separated alpha values");
    sweep->add_option("--config", sweep_cfg, "key=value config file");

    auto *defaults = app.add_subcommand("defaults", "Print the default config file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*track) {
            return cmd_track(seq_dir, cfg_path, frames_dir, diag_path, model_path, traj_path, json_path,
                             no_handling);
        }
        if (*synth) {
            write_sequence(out_dir, synth_sequence(load_synth_spec(spec_path), seed));
            return 0;
        }
        if (*eval) {
            return cmd_eval(eval_traj, eval_gt, eval_json);
        }
        if (*abl) {
            const Sequence seq = load_sequence(ablate_dir);
            std::cout << ablation_table(ablate(seq, config_or_default(ablate_cfg)));
            return 0;
        }
        if (*sweep) {
            std::vector<Sequence> seqs;
            for (const auto &d : sweep_dirs) {
                seqs.push_back(load_sequence(d));
            }
            std::cout << sweep_table(sweep_alpha(seqs, config_or_default(sweep_cfg), parse_alphas(alphas)));
            return 0;
        }
        if (*defaults) {
            std::cout << to_config_text(TrackerConfig{});
            return 0;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
