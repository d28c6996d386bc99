// dv3: depth videos -> 3D dynamic voxel point sets -> multi-stream
// point-set classifier. Subcommands: extract, synth, train, eval, export-ply.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dv3/pipeline.hpp"

namespace {

struct PipelineFlags {
    std::string intrinsics_file;
    std::string pooling = "approx";
    double lambda = 1.0;
    int t1 = 4;
    int t2 = 3;
    double voxel_size = 35.0;
    bool no_proposal = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--intrinsics", intrinsics_file, "Intrinsics file (fx, fy, cx, cy)");
        cmd->add_option("--pooling", pooling, "Rank pooling route: approx or exact")
            ->check(CLI::IsMember({"approx", "exact"}));
        cmd->add_option("--lambda", lambda, "RankSVM regularizer weight (exact pooling)");
        cmd->add_option("--splits", t1, "Temporal split count T1")->check(CLI::PositiveNumber);
        cmd->add_option("--t2", t2, "Appearance stream count T2")->check(CLI::PositiveNumber);
        cmd->add_option("--voxel-size", voxel_size, "Voxel edge length in mm")
            ->check(CLI::PositiveNumber);
        cmd->add_flag("--no-proposal", no_proposal, "Skip depth-threshold action proposal");
    }

    dv3::PipelineConfig config() const {
        dv3::PipelineConfig cfg;
        cfg.voxel_size_mm = voxel_size;
        cfg.t1 = t1;
        cfg.t2 = t2;
        cfg.pooling = pooling == "exact" ? dv3::PoolMode::exact : dv3::PoolMode::approx;
        cfg.rank_cfg.lambda = lambda;
        cfg.proposal = !no_proposal;
        return cfg;
    }

    dv3::CameraIntrinsics intrinsics(int width, int height) const {
        if (!intrinsics_file.empty()) return dv3::load_intrinsics(intrinsics_file);
        return dv3::default_intrinsics(width, height);
    }
};

void print_timings(const dv3::StageTimings& t) {
    std::printf("proposal       %10.2f ms\n", t.proposal_ms);
    std::printf("voxelization   %10.2f ms\n", t.voxelization_ms);
    std::printf("rank pooling   %10.2f ms\n", t.rank_pooling_ms);
    std::printf("pointlization  %10.2f ms\n", t.pointlization_ms);
    std::printf("total          %10.2f ms\n", t.total_ms());
}

int cmd_extract(const std::string& input, const std::string& out_prefix,
                const PipelineFlags& flags, const std::string& bbox_file) {
    auto frames = dv3::decode_depth_auto(input);
    auto k = flags.intrinsics(frames.front().width, frames.front().height);
    auto bboxes = dv3::discover_bboxes(input, bbox_file, !flags.no_proposal);
    dv3::ExtractOutput out = dv3::extract_from_frames(frames, k, flags.config(), bboxes);

    const std::string motion_path = out_prefix + ".motion.dv3p";
    dv3::write_pointset(motion_path, out.motion);
    std::printf("%s: %d points, %d motion channels\n", motion_path.c_str(), out.motion.count,
                out.motion.channels);
    for (std::size_t s = 0; s < out.appearance.size(); ++s) {
        const std::string path = out_prefix + ".appear" + std::to_string(s) + ".dv3p";
        dv3::write_pointset(path, out.appearance[s]);
        std::printf("%s: %d points\n", path.c_str(), out.appearance[s].count);
    }
    if (!out.rank_converged)
        std::fprintf(stderr, "warning: exact rank pooling did not converge\n");
    print_timings(out.timings);
    return 0;
}

int cmd_synth(const std::string& out_dir, const dv3::DatasetParams& params) {
    auto entries = dv3::make_dataset(out_dir, params);
    int train = 0, test = 0;
    for (const auto& e : entries) (e.split == "train" ? train : test)++;
    std::printf("%s: %d train + %d test clips, %d classes, manifest.csv written\n",
                out_dir.c_str(), train, test, dv3::kSynthClassCount);
    return 0;
}

struct TrainFlags {
    std::string manifest;
    std::string out = "model.dv3m";
    std::string metrics_file;
    std::string model = "desk";
    int epochs = 70;
    int batch = 32;
    double lr = 0.001;
    int points = 0;  // 0 = model preset default
    std::uint64_t seed = 0;
    int jobs = 0;
    bool no_augment = false;
    bool motion_only = false;
    bool appearance_only = false;
};

int cmd_train(const TrainFlags& tf, const PipelineFlags& flags) {
    auto entries = dv3::parse_manifest(tf.manifest);
    dv3::PipelineConfig cfg = flags.config();
    int classes = 0;
    for (const auto& e : entries) classes = std::max(classes, e.class_id + 1);

    auto k = flags.intrinsics(160, 120);
    auto train_set = dv3::build_dataset(entries, "train", k, cfg, tf.jobs);
    if (train_set.empty()) throw dv3::Error("manifest has no train entries");

    const int motion_channels = cfg.t1 + 1;
    dv3::net::ModelSpec spec;
    if (tf.model == "full")
        spec = dv3::net::full_model_spec(classes, motion_channels, cfg.t2);
    else if (tf.model == "tiny")
        spec = dv3::net::tiny_model_spec(classes, motion_channels, cfg.t2);
    else
        spec = dv3::net::desk_model_spec(classes, motion_channels, cfg.t2);
    if (tf.points > 0) spec.n_sample = tf.points;
    if (tf.motion_only) spec.t2 = 0;
    if (tf.appearance_only) spec.has_motion = false;
    if (tf.motion_only || tf.appearance_only) {
        // Drop the unused streams from the cached samples.
        for (auto& s : train_set) {
            if (tf.motion_only) s.appearance.clear();
            if (tf.appearance_only) s.motion = dv3::DvPointSet{};
        }
    }

    dv3::net::TrainConfig tc;
    tc.epochs = tf.epochs;
    tc.batch_size = tf.batch;
    tc.lr = tf.lr;
    tc.seed = tf.seed;
    tc.threads = tf.jobs;
    tc.use_augment = !tf.no_augment;

    auto result = dv3::net::train<float>(train_set, spec, tc);
    dv3::net::save_checkpoint(tf.out, result.model);

    std::string metrics = dv3::net::format_metrics(result.metrics);
    if (!tf.metrics_file.empty()) dv3::io::write_file(tf.metrics_file, metrics);
    const auto& last = result.metrics.back();
    std::printf("trained %d epochs on %zu samples; final loss %.4f accuracy %.4f\n",
                tf.epochs, train_set.size(), last.loss, last.accuracy);
    std::printf("checkpoint: %s\n", tf.out.c_str());
    return 0;
}

int cmd_eval(const std::string& manifest_path, const std::string& checkpoint,
             const std::string& split, const PipelineFlags& flags, int jobs) {
    auto model = dv3::net::load_checkpoint(checkpoint);
    auto entries = dv3::parse_manifest(manifest_path);
    int classes = 0;
    for (const auto& e : entries) classes = std::max(classes, e.class_id + 1);
    if (classes > model.spec.classes)
        throw dv3::Error("class count mismatch: manifest has " + std::to_string(classes) +
                         " classes, checkpoint expects " + std::to_string(model.spec.classes));

    dv3::PipelineConfig cfg = flags.config();
    cfg.t1 = model.spec.has_motion ? model.spec.motion_channels - 1 : cfg.t1;
    cfg.t2 = std::max(model.spec.t2, 1);

    auto k = flags.intrinsics(160, 120);
    auto samples = dv3::build_dataset(entries, split, k, cfg, jobs);
    if (samples.empty()) throw dv3::Error("manifest has no " + split + " entries");
    if (model.spec.t2 == 0)
        for (auto& s : samples) s.appearance.clear();
    if (!model.spec.has_motion)
        for (auto& s : samples) s.motion = dv3::DvPointSet{};

    auto result = dv3::net::evaluate(model, samples, jobs);
    std::printf("accuracy: %.4f (%d samples)\n", result.accuracy, result.total);
    std::printf("confusion (rows = truth):\n");
    for (int t = 0; t < model.spec.classes; ++t) {
        for (int p = 0; p < model.spec.classes; ++p)
            std::printf("%5d", result.confusion[static_cast<std::size_t>(t) * model.spec.classes + p]);
        std::printf("\n");
    }
    return 0;
}

int cmd_export_ply(const std::string& input, const std::string& output) {
    dv3::DvPointSet ps = dv3::read_pointset(input);
    dv3::export_ply(output, ps);
    std::printf("%s: %d points, %d channels\n", output.c_str(), ps.count, ps.channels);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D dynamic voxel extraction and point-set action recognition"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);

    // extract
    auto* extract = app.add_subcommand("extract", "Depth video -> DV3P point set files");
    std::string ex_input, ex_out = "out", ex_bbox;
    PipelineFlags ex_flags;
    extract->add_option("input", ex_input, "Depth clip (.d16 file or PNG directory)")->required();
    extract->add_option("-o,--out", ex_out, "Output path prefix");
    extract->add_option("--bbox-file", ex_bbox, "Per-frame bbox file (frame x y w h)");
    ex_flags.attach(extract);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic depth dataset");
    std::string sy_out = "synth_data";
    dv3::DatasetParams sy_params;
    synth->add_option("--out", sy_out, "Output directory");
    synth->add_option("--train-per-class", sy_params.n_train_per_class, "Training clips per class");
    synth->add_option("--test-per-class", sy_params.n_test_per_class, "Test clips per class");
    synth->add_option("--frames", sy_params.frames, "Frames per clip");
    synth->add_option("--width", sy_params.width, "Frame width");
    synth->add_option("--height", sy_params.height, "Frame height");
    synth->add_option("--radius", sy_params.radius_mm, "Sphere radius in mm");
    synth->add_option("--noise", sy_params.noise_sigma_mm, "Depth noise sigma in mm");
    synth->add_option("--seed", sy_params.base_seed, "Base seed");

    // train
    auto* train = app.add_subcommand("train", "Train the multi-stream classifier");
    TrainFlags tr;
    PipelineFlags tr_flags;
    train->add_option("--manifest", tr.manifest, "Dataset manifest (path,class_id,split)")
        ->required();
    train->add_option("-o,--out", tr.out, "Checkpoint output path");
    train->add_option("--metrics", tr.metrics_file, "Per-epoch metrics CSV output");
    train->add_option("--model", tr.model, "Model preset")
        ->check(CLI::IsMember({"desk", "full", "tiny"}));
    train->add_option("--epochs", tr.epochs, "Training epochs")->check(CLI::PositiveNumber);
    train->add_option("--batch", tr.batch, "Batch size")->check(CLI::PositiveNumber);
    train->add_option("--lr", tr.lr, "Initial learning rate");
    train->add_option("--points", tr.points, "Sampled points per stream");
    train->add_option("--seed", tr.seed, "Training seed");
    train->add_option("--jobs", tr.jobs, "Worker threads (0 = hardware)");
    train->add_flag("--no-augment", tr.no_augment, "Disable data augmentation");
    train->add_flag("--motion-only", tr.motion_only, "Train without appearance streams");
    train->add_flag("--appearance-only", tr.appearance_only, "Train without the motion stream");
    tr_flags.attach(train);

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest split");
    std::string ev_manifest, ev_checkpoint, ev_split = "test";
    int ev_jobs = 0;
    PipelineFlags ev_flags;
    eval->add_option("--manifest", ev_manifest, "Dataset manifest")->required();
    eval->add_option("--checkpoint", ev_checkpoint, "Model checkpoint (.dv3m)")->required();
    eval->add_option("--split", ev_split, "Manifest split to evaluate")
        ->check(CLI::IsMember({"train", "test"}));
    eval->add_option("--jobs", ev_jobs, "Worker threads (0 = hardware)");
    ev_flags.attach(eval);

    // export-ply
    auto* ply = app.add_subcommand("export-ply", "Convert a DV3P file to ASCII PLY");
    std::string ply_in, ply_out;
    ply->add_option("input", ply_in, "DV3P file")->required();
    ply->add_option("output", ply_out, "PLY file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (extract->parsed()) return cmd_extract(ex_input, ex_out, ex_flags, ex_bbox);
        if (synth->parsed()) return cmd_synth(sy_out, sy_params);
        if (train->parsed()) return cmd_train(tr, tr_flags);
        if (eval->parsed()) return cmd_eval(ev_manifest, ev_checkpoint, ev_split, ev_flags, ev_jobs);
        if (ply->parsed()) return cmd_export_ply(ply_in, ply_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
