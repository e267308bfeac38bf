#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sphenc/envmap.hpp"
#include "sphenc/gradcheck.hpp"
#include "sphenc/io.hpp"
#include "sphenc/model.hpp"
#include "sphenc/train.hpp"

namespace sphenc {
namespace {

// Options shared by every command that builds an encoder.
struct EncoderOpts {
    std::string encoder = "hashsphere";
    int levels = 8;
    int features = 2;
    std::uint64_t table_size = 1ull << 14;
    int dir_levels = 4;
    std::uint32_t base_res = 8;
    double scale = 2.0;
};

void add_encoder_flags(CLI::App* cmd, EncoderOpts& o, bool fixed_kind) {
    if (!fixed_kind)
        cmd->add_option("--encoder", o.encoder, "Encoder: hashsphere, grid2d, grid3d")
            ->capture_default_str();
    cmd->add_option("--levels", o.levels, "Resolution levels L")->capture_default_str();
    cmd->add_option("--features", o.features, "Features per level F (1, 2, 4, or 8)")
        ->capture_default_str();
    cmd->add_option("--table-size", o.table_size, "Per-level table row cap T")
        ->capture_default_str();
    cmd->add_option("--base-res", o.base_res, "Base grid resolution (grid and joint encoders)")
        ->capture_default_str();
    cmd->add_option("--scale", o.scale, "Per-level resolution scale (grid and joint encoders)")
        ->capture_default_str();
}

EncoderSettings build_settings(const EncoderOpts& o) {
    EncoderSettings enc;
    enc.kind = encoder_from_name(o.encoder);
    switch (enc.kind) {
        case EncoderKind::HashSphere:
            enc.sphere.levels = o.levels;
            enc.sphere.features = o.features;
            if (o.table_size > 0xffffffffull) throw config_error("table size too large");
            enc.sphere.hash.table_cap = std::uint32_t(o.table_size);
            break;
        case EncoderKind::HashGridSphere:
            enc.joint.levels = o.levels;
            enc.joint.dir_levels_cap = o.dir_levels;
            enc.joint.features = o.features;
            enc.joint.base_resolution = o.base_res;
            enc.joint.per_level_scale = o.scale;
            if (o.table_size > 0xffffffffull) throw config_error("table size too large");
            enc.joint.hash.table_cap = std::uint32_t(o.table_size);
            break;
        case EncoderKind::Grid2dPolar:
        case EncoderKind::Grid3dCartesian:
            enc.grid.dims = enc.kind == EncoderKind::Grid2dPolar ? 2 : 3;
            enc.grid.levels = o.levels;
            enc.grid.features = o.features;
            enc.grid.base_resolution = o.base_res;
            enc.grid.per_level_scale = o.scale;
            if (o.table_size > 0xffffffffull) throw config_error("table size too large");
            enc.grid.table_cap = std::uint32_t(o.table_size);
            break;
    }
    validate(enc);
    return enc;
}

struct SourceOpts {
    std::string input;
    std::string procedural;
    int width = 256;
    int height = 128;
    std::uint64_t map_seed = 7;
};

void add_source_flags(CLI::App* cmd, SourceOpts& o) {
    auto* group = cmd->add_option_group("target", "Radiance target (exactly one)");
    group->add_option("--input", o.input, "Lat-long radiance image (.hdr or .pfm)");
    group->add_option("--procedural", o.procedural,
                      "Built-in target: constant, gradient, noise, lights");
    group->require_option(1);
    cmd->add_option("--width", o.width, "Procedural map width")->capture_default_str();
    cmd->add_option("--height", o.height, "Procedural map height")->capture_default_str();
    cmd->add_option("--map-seed", o.map_seed, "Procedural map seed")->capture_default_str();
}

EnvMap build_map(const SourceOpts& o) {
    if (!o.input.empty()) return load_envmap(o.input);
    return make_procedural_map(procedural_from_name(o.procedural), o.width, o.height, o.map_seed);
}

struct TrainOpts {
    int steps = 512;
    int batch = 1 << 14;
    double lr = 0.01;
    double l2 = 0.0;
    std::uint64_t seed = 1;
    int hidden_layers = 2;
    int hidden_width = 16;
};

void add_train_flags(CLI::App* cmd, TrainOpts& o) {
    cmd->add_option("--steps", o.steps, "Adam steps")->capture_default_str();
    cmd->add_option("--batch", o.batch, "Samples per step")->capture_default_str();
    cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--l2", o.l2, "L2 regularization weight")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Run seed (init and sampling)")->capture_default_str();
    cmd->add_option("--hidden-layers", o.hidden_layers, "MLP hidden layer count")
        ->capture_default_str();
    cmd->add_option("--hidden-width", o.hidden_width, "MLP hidden width")->capture_default_str();
}

TrainConfig to_train_config(const TrainOpts& o) {
    TrainConfig cfg;
    cfg.steps = o.steps;
    cfg.batch = o.batch;
    cfg.lr = o.lr;
    cfg.l2_lambda = o.l2;
    cfg.seed = o.seed;
    return cfg;
}

void print_report(const TrainReport& rep) {
    std::printf("encoder=%s seed=%llu levels=%d features=%d table_cap=%llu\n", rep.encoder.c_str(),
                (unsigned long long)rep.seed, rep.levels, rep.features,
                (unsigned long long)rep.table_cap);
    std::printf("enc_bytes=%llu mlp_bytes=%llu index_table_bytes=%llu\n",
                (unsigned long long)rep.enc_bytes, (unsigned long long)rep.mlp_bytes,
                (unsigned long long)rep.index_table_bytes);
    std::printf("initial_rel_l2=%.17g\nfinal_rel_l2=%.17g\n", rep.initial_rel_l2, rep.final_rel_l2);
    if (!std::isnan(rep.final_psnr)) std::printf("final_psnr=%.17g\n", rep.final_psnr);
    if (!std::isnan(rep.train_rel_l2))
        std::printf("train_rel_l2=%.17g\nnovel_rel_l2=%.17g\n", rep.train_rel_l2, rep.novel_rel_l2);
    std::printf("wall_seconds=%.3f\n", rep.wall_seconds);
}

void write_artifacts(const std::string& prefix, const Model<float>& model, const TrainReport& rep) {
    save_checkpoint(prefix + ".ckpt", model);
    write_csv(prefix + ".csv", std::span<const TrainReport>(&rep, 1));
}

void run_fit_envmap(const EncoderOpts& eo, const SourceOpts& so, const TrainOpts& to,
                    const std::string& prefix) {
    EncoderSettings enc = build_settings(eo);
    if (enc.kind == EncoderKind::HashGridSphere)
        throw config_error("fit-envmap consumes directions only; use fit-joint for hashgridsphere");

    MLPConfig mlp;
    mlp.hidden_layers = to.hidden_layers;
    mlp.hidden_width = to.hidden_width;
    mlp.output_width = 3;
    mlp.hidden_activation = Activation::Identity;
    mlp.output_activation = OutputActivation::Exponential;

    Model<float> model = make_model(enc, mlp, to.seed);
    EnvMap map = build_map(so);

    std::ofstream loss_log(prefix + "_loss.jsonl", std::ios::trunc);
    if (!loss_log) throw io_error("cannot create " + prefix + "_loss.jsonl");
    TrainReport rep = train_envmap(model, map, to_train_config(to), &loss_log);

    write_artifacts(prefix, model, rep);
    print_report(rep);
}

void run_fit_joint(const EncoderOpts& eo, const TrainOpts& to, int lobes, std::uint64_t field_seed,
                   const std::string& prefix) {
    EncoderSettings enc = build_settings(eo);

    MLPConfig mlp;
    mlp.hidden_layers = to.hidden_layers;
    mlp.hidden_width = to.hidden_width;
    mlp.output_width = 1;
    mlp.hidden_activation = Activation::LeakyReLU;
    mlp.output_activation = OutputActivation::Sigmoid;

    Model<float> model = make_model(enc, mlp, to.seed);
    SyntheticField5D field = SyntheticField5D::make(lobes, field_seed);

    std::ofstream loss_log(prefix + "_loss.jsonl", std::ios::trunc);
    if (!loss_log) throw io_error("cannot create " + prefix + "_loss.jsonl");
    TrainReport rep = train_joint(model, field, to_train_config(to), &loss_log);

    write_artifacts(prefix, model, rep);
    print_report(rep);
}

void run_eval(const std::string& ckpt, const SourceOpts& so, std::uint64_t seed, int band_samples,
              const std::string& prefix) {
    Model<float> model = load_checkpoint(ckpt);
    if (model.mlp_cfg.output_width != 3)
        throw config_error("eval expects a radiance-map model (3 output channels)");
    EnvMap map = build_map(so);

    EnvmapEval ev = evaluate_envmap(model, map, seed);
    auto bands = latitude_profile(model, map, band_samples, seed + 1);

    std::printf("rel_l2=%.17g\npsnr=%.17g\npolar_mid_ratio=%.17g\n", ev.rel_l2, ev.psnr,
                polar_mid_ratio(bands));
    for (int j = 0; j < 18; ++j)
        std::printf("band_%02d=%.17g\n", j, bands[std::size_t(j)]);

    if (!prefix.empty()) {
        EnvMap pred{map.width, map.height, ev.pred};
        EnvMap ref{map.width, map.height, ev.ref};
        save_pfm(prefix + "_pred.pfm", pred);
        save_pfm(prefix + "_ref.pfm", ref);
    }
}

int run_gradcheck(const EncoderOpts& eo, int hidden_layers, int hidden_width, int out_width,
                  const std::string& hidden_act, const std::string& out_act, int probes,
                  double step, std::uint64_t seed) {
    EncoderSettings enc = build_settings(eo);

    MLPConfig mlp;
    mlp.hidden_layers = hidden_layers;
    mlp.hidden_width = hidden_width;
    mlp.output_width = out_width;
    if (hidden_act == "identity")
        mlp.hidden_activation = Activation::Identity;
    else if (hidden_act == "relu")
        mlp.hidden_activation = Activation::ReLU;
    else if (hidden_act == "leaky")
        mlp.hidden_activation = Activation::LeakyReLU;
    else
        throw config_error("unknown hidden activation: " + hidden_act);
    if (out_act == "identity")
        mlp.output_activation = OutputActivation::Identity;
    else if (out_act == "exp")
        mlp.output_activation = OutputActivation::Exponential;
    else if (out_act == "sigmoid")
        mlp.output_activation = OutputActivation::Sigmoid;
    else
        throw config_error("unknown output activation: " + out_act);

    Model<float> model = make_model(enc, mlp, seed);
    GradCheckResult res = gradient_check(model, probes, step, seed + 1);
    std::printf("max_rel_err=%.17g\nmax_abs_err=%.17g\nparams_checked=%llu\nprobes=%d\n",
                res.max_rel_err, res.max_abs_err, (unsigned long long)res.params_checked,
                res.probes);
    if (!(res.max_rel_err < 1e-4)) {
        std::fprintf(stderr, "error: gradient check failed (max relative error %.3g >= 1e-4)\n",
                     res.max_rel_err);
        return 1;
    }
    return 0;
}

void run_export_grid(int level, const std::string& path) {
    if (level < 0 || level > GeodesicGrid::kMaxDenseLevel)
        throw config_error("export level must be in [0, 8]");
    GeodesicGrid grid(level);
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw io_error("cannot create " + path);
    write_obj(os, grid, level);
    if (!os) throw io_error("short write to " + path);
    std::printf("level=%d vertices=%llu faces=%llu\n", level,
                (unsigned long long)vertex_count(level), (unsigned long long)face_count(level));
}

void run_sweep(const std::vector<std::string>& encoders, const std::vector<std::uint64_t>& sizes,
               const std::vector<int>& levels_list, const EncoderOpts& base, const SourceOpts& so,
               const TrainOpts& to, const std::string& out_path) {
    EnvMap map = build_map(so);
    std::vector<TrainReport> reports;
    for (const std::string& name : encoders)
        for (std::uint64_t t : sizes)
            for (int levels : levels_list) {
                EncoderOpts eo = base;
                eo.encoder = name;
                eo.table_size = t;
                eo.levels = levels;
                EncoderSettings enc = build_settings(eo);
                if (enc.kind == EncoderKind::HashGridSphere)
                    throw config_error("sweep covers direction-only encoders");

                MLPConfig mlp;
                mlp.hidden_layers = to.hidden_layers;
                mlp.hidden_width = to.hidden_width;
                mlp.output_width = 3;
                mlp.hidden_activation = Activation::Identity;
                mlp.output_activation = OutputActivation::Exponential;

                Model<float> model = make_model(enc, mlp, to.seed);
                TrainReport rep = train_envmap(model, map, to_train_config(to), nullptr);
                std::printf("%s T=%llu L=%d final_rel_l2=%.6g bytes=%llu\n", name.c_str(),
                            (unsigned long long)t, levels, rep.final_rel_l2,
                            (unsigned long long)(rep.enc_bytes + rep.mlp_bytes));
                reports.push_back(std::move(rep));
            }
    write_csv(out_path, reports);
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Geodesic-grid directional encodings: fitting, evaluation, and diagnostics"};
    app.require_subcommand(1);

    // fit-envmap
    auto* fit = app.add_subcommand("fit-envmap", "Fit a radiance map with a directional encoding");
    EncoderOpts fit_enc;
    SourceOpts fit_src;
    TrainOpts fit_train;
    std::string fit_out;
    add_encoder_flags(fit, fit_enc, false);
    add_source_flags(fit, fit_src);
    add_train_flags(fit, fit_train);
    fit->add_option("--out", fit_out, "Output prefix (.ckpt, .csv, _loss.jsonl)")->required();
    fit->callback([&] { run_fit_envmap(fit_enc, fit_src, fit_train, fit_out); });

    // fit-joint
    auto* fj = app.add_subcommand("fit-joint",
                                  "Fit a synthetic 5D field with the joint spatio-directional encoding");
    EncoderOpts fj_enc;
    fj_enc.encoder = "hashgridsphere";
    fj_enc.table_size = 1ull << 16;
    fj_enc.base_res = 16;
    TrainOpts fj_train;
    fj_train.steps = 4096;
    fj_train.batch = 4096;
    fj_train.lr = 0.005;
    int fj_lobes = 4;
    std::uint64_t fj_field_seed = 7;
    std::string fj_out;
    add_encoder_flags(fj, fj_enc, true);
    fj->add_option("--dir-levels", fj_enc.dir_levels, "Directional subdivision cap L_d")
        ->capture_default_str();
    add_train_flags(fj, fj_train);
    fj->add_option("--lobes", fj_lobes, "Lobe count of the synthetic field")->capture_default_str();
    fj->add_option("--field-seed", fj_field_seed, "Synthetic field seed")->capture_default_str();
    fj->add_option("--out", fj_out, "Output prefix (.ckpt, .csv, _loss.jsonl)")->required();
    fj->callback([&] { run_fit_joint(fj_enc, fj_train, fj_lobes, fj_field_seed, fj_out); });

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint against a radiance target");
    SourceOpts ev_src;
    std::string ev_ckpt, ev_out;
    std::uint64_t ev_seed = 1;
    int ev_band_samples = 2048;
    ev->add_option("--checkpoint", ev_ckpt, "Model checkpoint path")->required();
    add_source_flags(ev, ev_src);
    ev->add_option("--seed", ev_seed, "Evaluation sampling seed")->capture_default_str();
    ev->add_option("--band-samples", ev_band_samples, "Samples per 10-degree latitude band")
        ->capture_default_str();
    ev->add_option("--out", ev_out, "Optional prefix for _pred.pfm / _ref.pfm dumps");
    ev->callback([&] { run_eval(ev_ckpt, ev_src, ev_seed, ev_band_samples, ev_out); });

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck",
                                  "Compare analytic gradients against central finite differences");
    EncoderOpts gc_enc;
    gc_enc.levels = 3;
    gc_enc.dir_levels = 1;
    int gc_hidden_layers = 2, gc_hidden_width = 8, gc_out_width = 3;
    std::string gc_hidden_act = "identity", gc_out_act = "exp";
    int gc_probes = 100;
    double gc_step = 1e-3;
    std::uint64_t gc_seed = 1;
    int gc_rc = 0;
    add_encoder_flags(gc, gc_enc, false);
    gc->get_option("--encoder")->description("Encoder: hashsphere, hashgridsphere, grid2d, grid3d");
    gc->add_option("--dir-levels", gc_enc.dir_levels, "Directional cap (hashgridsphere)")
        ->capture_default_str();
    gc->add_option("--hidden-layers", gc_hidden_layers, "MLP hidden layer count")
        ->capture_default_str();
    gc->add_option("--hidden-width", gc_hidden_width, "MLP hidden width")->capture_default_str();
    gc->add_option("--out-width", gc_out_width, "MLP output width")->capture_default_str();
    gc->add_option("--hidden-act", gc_hidden_act, "Hidden activation: identity, relu, leaky")
        ->capture_default_str();
    gc->add_option("--out-act", gc_out_act, "Output activation: identity, exp, sigmoid")
        ->capture_default_str();
    gc->add_option("--probes", gc_probes, "Random probe count")->capture_default_str();
    gc->add_option("--step", gc_step, "Finite-difference step")->capture_default_str();
    gc->add_option("--seed", gc_seed, "Probe seed")->capture_default_str();
    gc->callback([&] {
        gc_rc = run_gradcheck(gc_enc, gc_hidden_layers, gc_hidden_width, gc_out_width,
                              gc_hidden_act, gc_out_act, gc_probes, gc_step, gc_seed);
    });

    // export-grid
    auto* ex = app.add_subcommand("export-grid", "Dump one geodesic subdivision level as OBJ");
    int ex_level = 2;
    std::string ex_out;
    ex->add_option("--level", ex_level, "Subdivision level")->capture_default_str();
    ex->add_option("--out", ex_out, "Output OBJ path")->required();
    ex->callback([&] { run_export_grid(ex_level, ex_out); });

    // sweep
    auto* sw = app.add_subcommand("sweep", "Fit a grid of (encoder, T, L) configs, one CSV row each");
    EncoderOpts sw_enc;
    SourceOpts sw_src;
    TrainOpts sw_train;
    std::vector<std::string> sw_encoders = {"hashsphere", "grid2d", "grid3d"};
    std::vector<std::uint64_t> sw_sizes = {1ull << 14, 1ull << 16, 1ull << 18};
    std::vector<int> sw_levels = {8};
    std::string sw_out;
    sw->add_option("--encoders", sw_encoders, "Encoders to sweep")
        ->delimiter(',')
        ->capture_default_str();
    sw->add_option("--table-sizes", sw_sizes, "Table row caps to sweep")
        ->delimiter(',')
        ->capture_default_str();
    sw->add_option("--levels-list", sw_levels, "Level counts to sweep")
        ->delimiter(',')
        ->capture_default_str();
    sw->add_option("--features", sw_enc.features, "Features per level F")->capture_default_str();
    sw->add_option("--base-res", sw_enc.base_res, "Base grid resolution (grid encoders)")
        ->capture_default_str();
    sw->add_option("--scale", sw_enc.scale, "Per-level resolution scale (grid encoders)")
        ->capture_default_str();
    add_source_flags(sw, sw_src);
    add_train_flags(sw, sw_train);
    sw->add_option("--out", sw_out, "Output CSV path")->required();
    sw->callback(
        [&] { run_sweep(sw_encoders, sw_sizes, sw_levels, sw_enc, sw_src, sw_train, sw_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return gc_rc;
}

}  // namespace sphenc
