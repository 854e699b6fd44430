// tagnav command-line front end: each pipeline stage as a subcommand plus
// the end-to-end benchmark.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tagnav/butterworth.hpp"
#include "tagnav/detection.hpp"
#include "tagnav/geometry.hpp"
#include "tagnav/metrics.hpp"
#include "tagnav/pnp.hpp"
#include "tagnav/sim.hpp"
#include "tagnav/svg.hpp"
#include "tagnav/trajectory.hpp"

namespace {

using namespace tagnav;

std::string out_path(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

ExperimentConfig load_config(const std::string& path) {
    return experiment_config_from_json(load_json_file(path));
}

PnpMode parse_mode(const std::string& s) {
    if (s == "four_dof") return PnpMode::FourDOF;
    if (s == "six_dof") return PnpMode::SixDOF;
    throw InvalidParameter("mode must be four_dof or six_dof");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    const ExperimentConfig config = load_config(config_path);
    std::filesystem::create_directories(out_dir);
    const PosePath ref = generate_reference(config.profile, config.room);
    const auto dets = synthesize_detections(config.marker_map(), config.camera(),
                                            ref, config.noise);
    write_file_atomic(out_path(out_dir, "ground_truth.csv"),
                      trajectory_to_csv(path_to_trajectory(ref)));
    write_file_atomic(out_path(out_dir, "detections.jsonl"),
                      detections_to_jsonl(dets));
    std::cout << "wrote " << out_path(out_dir, "ground_truth.csv") << " ("
              << ref.size() << " frames) and detections.jsonl (" << dets.size()
              << " detections)\n";
    return 0;
}

int cmd_estimate(const std::string& det_path, const std::string& map_path,
                 const std::string& intr_path, const std::string& out_file,
                 const std::string& mode_str, int min_markers,
                 double min_confidence, long frames, double frame_rate) {
    const MarkerMap map = read_marker_map(map_path);
    const CameraIntrinsics intr = read_intrinsics(intr_path);
    const auto dets = threshold(read_detections(det_path), min_confidence);
    std::optional<FrameTimeline> timeline;
    if (frames > 0) timeline = FrameTimeline{0.0, frame_rate, frames};
    const Trajectory traj = estimate_trajectory(dets, map, intr,
                                                parse_mode(mode_str), min_markers,
                                                {}, timeline);
    write_file_atomic(out_file, trajectory_to_csv(traj));
    std::cout << "wrote " << out_file << " (" << traj.pose_count() << "/"
              << traj.points.size() << " frames with poses)\n";
    return 0;
}

int cmd_filter(const std::string& in_file, const std::string& out_file, int order,
               double cutoff, bool auto_cut, double energy_fraction,
               double cutoff_margin, double sample_rate) {
    const Trajectory raw = read_trajectory(in_file);
    double wc = cutoff;
    if (auto_cut)
        wc = auto_cutoff(raw, sample_rate, energy_fraction, cutoff_margin);
    else if (!(cutoff > 0.0))
        throw InvalidSpec("either --cutoff or --auto-cutoff is required");
    const FilterSpec spec{order, wc, sample_rate};
    spec.validate();
    const Trajectory filtered = filter_trajectory(spec, raw);
    write_file_atomic(out_file, trajectory_to_csv(filtered));
    std::cout << "wrote " << out_file << " (order " << order << ", cutoff "
              << fmt_g9(wc) << " rad/s)\n";
    return 0;
}

int cmd_evaluate(const std::string& a_file, const std::string& b_file,
                 const std::string& out_file, double frame_rate) {
    const Trajectory a = read_trajectory(a_file);
    const Trajectory b = read_trajectory(b_file);
    MetricReport report = evaluate_trajectories(a, b, 1.0 / frame_rate);
    const std::string text = to_json(report).dump(2) + "\n";
    if (!out_file.empty()) write_file_atomic(out_file, text);
    std::cout << text;
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir,
              bool with_fps) {
    const nlohmann::json j = load_json_file(config_path);
    std::vector<std::string> profiles;
    if (j.contains("profiles"))
        for (const auto& p : j.at("profiles")) profiles.push_back(p.get<std::string>());
    else
        profiles.push_back(j.contains("profile")
                               ? j.at("profile").value("kind", "spiral_eight")
                               : "spiral_eight");

    std::vector<std::pair<std::string, MetricReport>> rows;
    for (const auto& name : profiles) {
        ExperimentConfig config = experiment_config_from_json(j);
        config.profile.kind = profile_kind_from_string(name);
        const std::string dir = out_path(out_dir, name.c_str());
        const ExperimentArtifacts art = run_experiment(config, dir);
        for (const auto& w : art.warnings) std::cerr << "warning: " << w << "\n";

        MetricReport raw = art.raw_report;
        MetricReport filt = art.filtered_report;
        if (with_fps) {
            // time the post-detector stage only: estimation plus filtering
            const MarkerMap map = config.marker_map();
            const CameraIntrinsics intr = config.camera();
            const auto dets = threshold(
                read_detections(out_path(dir, "detections.jsonl")),
                config.min_confidence);
            const FrameTimeline timeline{0.0, config.profile.frame_rate,
                                         static_cast<long>(art.reference.size())};
            const FilterSpec spec{config.filter.order, art.cutoff_used,
                                  config.profile.frame_rate};
            const auto stage = [&] {
                Trajectory raw_t = estimate_trajectory(dets, map, intr, config.mode,
                                                       config.min_markers, {},
                                                       timeline);
                filter_trajectory(spec, raw_t);
            };
            filt.fps = measure_fps(stage, timeline.n_frames);
            filt.has_fps = true;
        }
        rows.emplace_back(name + " raw", raw);
        rows.emplace_back(name + " filtered", filt);
    }
    std::cout << format_bench_table(rows);
    return 0;
}

int cmd_bode(int order, double cutoff, double omega_min, double omega_max,
             int points, const std::string& out_file, const std::string& svg_file,
             double sample_rate) {
    const FilterSpec spec{order, cutoff, sample_rate};
    spec.validate();
    if (!(omega_min > 0.0) || !(omega_max > omega_min))
        throw InvalidParameter("need 0 < omega-min < omega-max");
    std::vector<double> omegas;
    for (int i = 0; i < points; ++i)
        omegas.push_back(omega_min * std::pow(omega_max / omega_min,
                                              double(i) / double(points - 1)));
    const auto resp = frequency_response(spec, omegas);
    std::ostringstream csv;
    csv << "omega_rad_s,magnitude_db,phase_deg\n";
    for (const auto& p : resp)
        csv << fmt_g9(p.omega) << "," << fmt_g9(p.magnitude_db) << ","
            << fmt_g9(p.phase_deg) << "\n";
    write_file_atomic(out_file, csv.str());
    if (!svg_file.empty()) {
        SvgSeries mag{"magnitude [dB]", "#1f77b4", {}};
        SvgSeries ph{"phase [deg]", "#ff7f0e", {}};
        for (const auto& p : resp) {
            mag.points.emplace_back(p.omega, p.magnitude_db);
            ph.points.emplace_back(p.omega, p.phase_deg);
        }
        write_file_atomic(svg_file,
                          render_line_chart("Butterworth response, order " +
                                                std::to_string(order),
                                            "omega [rad/s]", "dB / deg",
                                            {mag, ph}, true));
    }
    std::cout << "wrote " << out_file << "\n";
    return 0;
}

std::vector<double> load_signal(const std::string& path, const std::string& column) {
    const std::string head = read_file(path);
    if (head.rfind("t,", 0) == 0) {
        const Trajectory traj = read_trajectory(path);
        const auto sig = position_signals(traj);
        if (column == "x") return sig[0];
        if (column == "y") return sig[1];
        if (column == "z") return sig[2];
        throw InvalidParameter("column must be x, y or z");
    }
    std::istringstream in(head);
    std::vector<double> values;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto f = split_csv_line(line);
            values.push_back(std::stod(f.back()));
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": not a number");
        }
    }
    return values;
}

int cmd_spectrum(const std::string& in_file, const std::string& column,
                 double sample_rate, const std::string& out_file,
                 const std::string& svg_file) {
    const auto samples = load_signal(in_file, column);
    const Spectrum sp = amplitude_spectrum(samples, sample_rate);
    std::ostringstream csv;
    csv << "omega_rad_s,amplitude\n";
    for (size_t k = 0; k < sp.omega.size(); ++k)
        csv << fmt_g9(sp.omega[k]) << "," << fmt_g9(sp.amplitude[k]) << "\n";
    write_file_atomic(out_file, csv.str());
    if (!svg_file.empty()) {
        SvgSeries s{"amplitude", "#1f77b4", {}};
        for (size_t k = 1; k < sp.omega.size(); ++k)
            s.points.emplace_back(sp.omega[k], sp.amplitude[k]);
        write_file_atomic(svg_file,
                          render_line_chart("Amplitude spectrum", "omega [rad/s]",
                                            "amplitude", {s}));
    }
    std::cout << "wrote " << out_file << " (" << sp.omega.size() << " bins, "
              << "suggested cutoff " << fmt_g9(suggest_cutoff(samples, sample_rate))
              << " rad/s at 95% energy)\n";
    return 0;
}

int cmd_map_gen(int n, double side, double spacing, double center_height,
                const std::string& out_file) {
    const MarkerMap map = wall_marker_map(n, side, spacing, center_height);
    write_file_atomic(out_file, to_json(map).dump(2) + "\n");
    std::cout << "wrote " << out_file << " (" << n << " markers)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fiducial-marker UAV localization pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::string det_path, map_path, intr_path, in_file, out_file, svg_file;
    std::string a_file, b_file, mode_str = "four_dof", column = "x";
    int order = 2, min_markers = 1, points = 200, map_n = 8;
    double cutoff = 0.0, energy_fraction = 0.95, cutoff_margin = 4.0;
    double sample_rate = 30.0, min_confidence = 0.5, frame_rate = 30.0;
    double omega_min = 0.01, omega_max = 100.0;
    double map_side = 0.2, map_spacing = 0.58, map_height = 0.724;
    long frames = 0;
    bool auto_cut = false, no_fps = false;

    // TAGNAV_CONFIG_DIR provides a fallback directory for relative config paths
    auto resolve_config = [](std::string path) {
        namespace fs = std::filesystem;
        if (!fs::exists(path)) {
            if (const char* env = std::getenv("TAGNAV_CONFIG_DIR"); env && *env) {
                const fs::path alt = fs::path(env) / path;
                if (fs::exists(alt)) return alt.string();
            }
        }
        return path;
    };

    auto* sim = app.add_subcommand("simulate", "Generate ground truth and detections");
    sim->add_option("--config", config_path, "experiment config (JSON)")->required();
    sim->add_option("--out", out_dir, "output directory");

    auto* est = app.add_subcommand("estimate", "Per-frame pose estimation");
    est->add_option("--detections", det_path, "detections JSONL")->required();
    est->add_option("--map", map_path, "marker map JSON")->required();
    est->add_option("--intrinsics", intr_path, "intrinsics JSON")->required();
    est->add_option("--out", out_file, "output trajectory CSV")->required();
    est->add_option("--mode", mode_str, "four_dof | six_dof");
    est->add_option("--min-markers", min_markers, "minimum markers per frame");
    est->add_option("--min-confidence", min_confidence, "confidence threshold");
    est->add_option("--frames", frames, "total frame count (0 = infer)");
    est->add_option("--frame-rate", frame_rate, "frame rate [Hz]");

    auto* fil = app.add_subcommand("filter", "Butterworth-filter a trajectory");
    fil->add_option("--input", in_file, "raw trajectory CSV")->required();
    fil->add_option("--out", out_file, "filtered trajectory CSV")->required();
    fil->add_option("--order", order, "filter order");
    fil->add_option("--cutoff", cutoff, "cutoff [rad/s]");
    fil->add_flag("--auto-cutoff", auto_cut, "pick cutoff from the spectrum");
    fil->add_option("--energy-fraction", energy_fraction, "auto-cutoff energy fraction");
    fil->add_option("--cutoff-margin", cutoff_margin, "auto-cutoff safety margin");
    fil->add_option("--sample-rate", sample_rate, "sample rate [Hz]");

    auto* eva = app.add_subcommand("evaluate", "Trajectory similarity metrics");
    eva->add_option("trajectory_a", a_file, "estimated trajectory CSV")->required();
    eva->add_option("trajectory_b", b_file, "reference trajectory CSV")->required();
    eva->add_option("--out", out_file, "report JSON (optional)");
    eva->add_option("--frame-rate", frame_rate, "frame rate [Hz]");

    auto* ben = app.add_subcommand("bench", "End-to-end benchmark table");
    ben->add_option("--config", config_path, "bench config (JSON)")->required();
    ben->add_option("--out", out_dir, "output directory");
    ben->add_flag("--no-fps", no_fps, "skip throughput measurement");

    auto* bod = app.add_subcommand("bode", "Magnitude/phase response CSV");
    bod->add_option("--order", order, "filter order");
    bod->add_option("--cutoff", cutoff, "cutoff [rad/s]")->required();
    bod->add_option("--omega-min", omega_min, "lowest frequency [rad/s]");
    bod->add_option("--omega-max", omega_max, "highest frequency [rad/s]");
    bod->add_option("--points", points, "number of frequencies");
    bod->add_option("--out", out_file, "output CSV")->required();
    bod->add_option("--svg", svg_file, "optional SVG plot");
    bod->add_option("--sample-rate", sample_rate, "sample rate [Hz]");

    auto* spe = app.add_subcommand("spectrum", "One-sided amplitude spectrum");
    spe->add_option("--input", in_file, "signal or trajectory CSV")->required();
    spe->add_option("--column", column, "trajectory column (x|y|z)");
    spe->add_option("--sample-rate", sample_rate, "sample rate [Hz]");
    spe->add_option("--out", out_file, "output CSV")->required();
    spe->add_option("--svg", svg_file, "optional SVG plot");

    auto* mg = app.add_subcommand("map-gen", "Generate a wall marker map");
    mg->add_option("--n", map_n, "marker count");
    mg->add_option("--side", map_side, "marker side [m]");
    mg->add_option("--spacing", map_spacing, "center spacing [m]");
    mg->add_option("--center-height", map_height, "center height [m]");
    mg->add_option("--out", out_file, "output map JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sim->parsed()) return cmd_simulate(resolve_config(config_path), out_dir);
        if (est->parsed())
            return cmd_estimate(det_path, map_path, intr_path, out_file, mode_str,
                                min_markers, min_confidence, frames, frame_rate);
        if (fil->parsed())
            return cmd_filter(in_file, out_file, order, cutoff, auto_cut,
                              energy_fraction, cutoff_margin, sample_rate);
        if (eva->parsed()) return cmd_evaluate(a_file, b_file, out_file, frame_rate);
        if (ben->parsed())
            return cmd_bench(resolve_config(config_path), out_dir, !no_fps);
        if (bod->parsed())
            return cmd_bode(order, cutoff, omega_min, omega_max, points, out_file,
                            svg_file, sample_rate);
        if (spe->parsed())
            return cmd_spectrum(in_file, column, sample_rate, out_file, svg_file);
        if (mg->parsed())
            return cmd_map_gen(map_n, map_side, map_spacing, map_height, out_file);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::Usage: return 1;
            case ErrorKind::Input: return 2;
            case ErrorKind::Numeric: return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
