#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sphenc/envmap.hpp"
#include "sphenc/field5d.hpp"
#include "sphenc/model.hpp"

namespace sphenc {

struct TrainConfig {
    int steps = 512;
    int batch = 1 << 14;
    double lr = 0.01;
    double l2_lambda = 0.0;
    std::uint64_t seed = 1;
    int band_samples = 2048;        // latitude-profile samples per band
    int joint_eval_samples = 8192;  // paired held-in/held-out probes
};

struct TrainReport {
    std::string encoder;
    std::uint64_t seed = 0;
    int levels = 0;
    int features = 0;
    std::uint64_t table_cap = 0;
    int steps = 0;
    int batch = 0;
    double lr = 0.0;

    std::vector<double> loss_curve;
    double initial_rel_l2 = std::nan("");
    double final_rel_l2 = std::nan("");
    double final_psnr = std::nan("");
    std::array<double, 18> band_rel_err{};  // 10-degree colatitude bands, pole to pole

    double train_rel_l2 = std::nan("");  // joint task: held-in directions
    double novel_rel_l2 = std::nan("");  // joint task: held-out directions

    std::uint64_t enc_params = 0, mlp_params = 0;
    std::uint64_t enc_bytes = 0, mlp_bytes = 0, index_table_bytes = 0;
    double wall_seconds = 0.0;  // excluded from CSV (not reproducible)
};

// Full prediction dump from the stratified per-texel evaluation grid, kept so
// metrics can be recomputed from the same residuals.
struct EnvmapEval {
    double rel_l2 = 0.0;
    double psnr = 0.0;  // in log(1+x) space, peak taken from the reference
    std::vector<float> pred, ref;  // sample-major, 3 channels
    std::vector<double> weight;    // solid-angle weight per sample
};

struct JointEval {
    double train_rel_l2 = 0.0;
    double novel_rel_l2 = 0.0;
};

// Fits model to the map with fresh uniform-sphere batches and Adam. The model
// must have a 3-wide output head. Deterministic given (model seed, config).
TrainReport train_envmap(Model<float>& model, const EnvMap& map, const TrainConfig& cfg,
                         std::ostream* loss_log = nullptr);

// One stratified sample per texel, solid-angle weighted.
EnvmapEval evaluate_envmap(const Model<float>& model, const EnvMap& map, std::uint64_t seed);

// Mean |pred - ref| / (ref + 0.01) per 10-degree colatitude band.
std::array<double, 18> latitude_profile(const Model<float>& model, const EnvMap& map,
                                        int samples_per_band, std::uint64_t seed);

// max(polar bands) / median(mid-latitude bands); the flatness score used to
// compare encoders.
double polar_mid_ratio(const std::array<double, 18>& bands);

// 256 fixed training directions and the held-out set rotated 1.8 degrees
// along each direction's own great circle (minimum gap to the training set
// asserted > 0.5 degrees).
const std::vector<Vec3>& joint_train_directions();
const std::vector<Vec3>& joint_novel_directions();

// Fits a 1-wide sigmoid head to field.normalized over positions uniform in
// the unit cube and directions from the fixed training set.
TrainReport train_joint(Model<float>& model, const SyntheticField5D& field, const TrainConfig& cfg,
                        std::ostream* loss_log = nullptr);

JointEval evaluate_joint(const Model<float>& model, const SyntheticField5D& field, int samples,
                         std::uint64_t seed);

}  // namespace sphenc
