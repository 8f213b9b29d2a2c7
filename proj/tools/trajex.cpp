// trajex: keypoint trajectory extraction from human manipulation videos.
// Run `trajex --help` for the subcommand list; exit codes are documented in
// the README and stable across releases.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "trajex/config.hpp"
#include "trajex/errors.hpp"
#include "trajex/frame_io.hpp"
#include "trajex/http_backend.hpp"
#include "trajex/pipeline.hpp"
#include "trajex/proposal.hpp"
#include "trajex/trajstore.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";

int log_level() {
    const char* v = std::getenv("TRAJEX_LOG");
    if (!v) return 1;  // warn
    std::string s = v;
    if (s == "error") return 0;
    if (s == "warn") return 1;
    if (s == "info") return 2;
    if (s == "debug") return 3;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[info] " << msg << "\n";
}

trajex::PipelineConfig load_config(const std::string& path) {
    if (path.empty()) return trajex::PipelineConfig{};
    return trajex::parse_config(path);
}

std::unique_ptr<trajex::VlmBackend> make_backend(const std::string& mock_fixture,
                                                 const trajex::PipelineConfig& cfg) {
    if (!mock_fixture.empty())
        return std::make_unique<trajex::MockBackend>(mock_fixture);
    return std::make_unique<trajex::HttpBackend>(cfg.backend);
}

std::string backward_path(const std::string& bundle_path) {
    return bundle_path + ".backward";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trajex: dense keypoint trajectory extraction from manipulation videos"};
    app.set_version_flag("--version", std::string("trajex ") + kToolVersion +
                                          " (bundle schema v" +
                                          std::to_string(trajex::kBundleSchemaVersion) + ")");
    app.require_subcommand(1);

    std::string input, config_path, bundle_path, backward, out;
    std::string mock_fixture, ee_out;
    int threads = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_input, bool needs_bundle) {
        if (needs_input) cmd->add_option("--input", input, "frame directory")->required();
        if (needs_bundle) cmd->add_option("--bundle", bundle_path, "bundle file")->required();
        cmd->add_option("--config", config_path, "pipeline config file");
        cmd->add_option("--threads", threads, "worker threads (0 = machine parallelism)");
    };

    auto* run = app.add_subcommand("run", "full pipeline: load through retarget");
    add_common(run, true, false);
    run->add_option("--out", out, "output directory")->required();
    run->add_option("--mock-backend", mock_fixture, "mock VLM fixture file");

    auto* propose = app.add_subcommand("propose", "seed selection + keypoint proposal");
    add_common(propose, true, false);
    propose->add_option("--out", out, "output bundle file")->required();
    propose->add_option("--mock-backend", mock_fixture, "mock VLM fixture file");

    auto* track = app.add_subcommand("track", "bidirectional tracking of a proposal bundle");
    add_common(track, true, true);
    track->add_option("--out", out, "output bundle file (backward tracks land in <out>.backward)")
        ->required();

    auto* filter = app.add_subcommand("filter", "forward-backward consistency filtering");
    add_common(filter, false, true);
    filter->add_option("--backward", backward, "backward-track bundle (default <bundle>.backward)");
    filter->add_option("--out", out, "output bundle file")->required();

    auto* interp = app.add_subcommand("interp", "occlusion gap interpolation");
    add_common(interp, false, true);
    interp->add_option("--out", out, "output bundle file")->required();

    auto* retarget = app.add_subcommand("retarget", "wrist to end-effector retargeting");
    add_common(retarget, false, true);
    retarget->add_option("--out", out, "output bundle file")->required();

    auto* render = app.add_subcommand("render", "overlay rendering for visual inspection");
    add_common(render, true, true);
    render->add_option("--out", out, "output directory")->required();

    auto* exp = app.add_subcommand("export", "tabular CSV export");
    add_common(exp, false, true);
    exp->add_option("--out", out, "output CSV file")->required();
    exp->add_option("--end-effector", ee_out, "also write the end-effector trajectory CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        trajex::PipelineConfig cfg = load_config(config_path);

        if (run->parsed()) {
            auto backend = make_backend(mock_fixture, cfg);
            auto outcome = trajex::run_pipeline(input, cfg, out, *backend, threads);
            if (outcome.exit_code == 0)
                log_info("bundle written to " + outcome.bundle_path);
            else
                std::cerr << "pipeline failed; partial bundle at " << outcome.bundle_path << "\n";
            return outcome.exit_code;
        }

        if (propose->parsed()) {
            auto backend = make_backend(mock_fixture, cfg);
            trajex::FrameSequence raw = trajex::load_sequence_raw(input, threads);
            int seed = trajex::select_seed_frame(raw, *backend, cfg);
            const trajex::Frame& sf = raw.frames[seed];
            std::string prompt = trajex::build_prompt(trajex::get_template(cfg.prompt_template),
                                                      cfg.task, sf.width, sf.height);
            auto proposal = trajex::propose_keypoints(*backend, sf, prompt, cfg.prompt_template,
                                                      {cfg.resize_w, cfg.resize_h}, cfg);
            auto b = trajex::make_proposal_bundle(raw, seed, proposal, cfg);
            trajex::save_bundle(b, out);
            log_info("proposal bundle written to " + out);
            return 0;
        }

        if (track->parsed()) {
            auto b = trajex::load_bundle(bundle_path);
            auto seq = trajex::load_sequence(input, cfg, threads);
            auto bwd = trajex::stage_track(b, seq, cfg, threads);
            trajex::TrajectoryBundle bb = b;
            bb.tracks = std::move(bwd);
            bb.stages.back() = "track_backward";
            trajex::save_bundle(b, out);
            trajex::save_bundle(bb, backward_path(out));
            return 0;
        }

        if (filter->parsed()) {
            auto b = trajex::load_bundle(bundle_path);
            std::string bwd_path = backward.empty() ? backward_path(bundle_path) : backward;
            auto bb = trajex::load_bundle(bwd_path);
            trajex::stage_filter(b, bb.tracks, cfg);
            trajex::save_bundle(b, out);
            return 0;
        }

        if (interp->parsed()) {
            auto b = trajex::load_bundle(bundle_path);
            trajex::stage_interpolate(b, cfg);
            trajex::save_bundle(b, out);
            return 0;
        }

        if (retarget->parsed()) {
            auto b = trajex::load_bundle(bundle_path);
            trajex::stage_retarget(b, cfg);
            trajex::save_bundle(b, out);
            return 0;
        }

        if (render->parsed()) {
            auto b = trajex::load_bundle(bundle_path);
            auto seq = trajex::load_sequence(input, cfg, threads);
            int n = trajex::render_overlay(seq, b, out, cfg, threads);
            log_info(std::to_string(n) + " overlay frames written to " + out);
            return 0;
        }

        if (exp->parsed()) {
            auto b = trajex::load_bundle(bundle_path);
            trajex::export_csv(b, out);
            if (!ee_out.empty()) {
                if (!b.end_effector)
                    throw trajex::Error(trajex::ErrorCode::WristTrackMissing,
                                        "bundle has no end-effector trajectory");
                trajex::export_end_effector_csv(*b.end_effector, ee_out);
            }
            return 0;
        }
    } catch (const trajex::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return trajex::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
