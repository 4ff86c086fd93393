#pragma once

#include <string>

#include "lal/network.hpp"
#include "lal/phantom.hpp"
#include "lal/sweep.hpp"
#include "lal/train.hpp"

namespace lal {

// --- PGM (binary P5, 8-bit) ---------------------------------------------
// Images map linearly to [0,1] (byte = round-half-up of 255*v); masks use
// {0, 255} and reading rejects any other value. Writers are atomic
// (temp file + rename).

void write_pgm(const std::string& path, const Image2D& image);
void write_pgm(const std::string& path, const Mask2D& mask);
Image2D read_pgm_image(const std::string& path);
Mask2D read_pgm_mask(const std::string& path);

// --- Checkpoints ---------------------------------------------------------
// "LALCKPT" + version 0x01, network config, then each tensor as
// length-prefixed name, rank, u32 dims, f64 data; everything little-endian.
// save/load round-trips bit-exactly; load validates names and shapes
// against the config before touching tensor data.

void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

// --- Run configuration ---------------------------------------------------
// Plain key=value text, '#' comments. Keys are dotted by section:
// net.depth, net.base_channels, train.epochs, train.batch_size, train.lr,
// train.optimizer, train.beta1, train.beta2, train.eps, train.seed,
// train.fixed_w, phantom.size, phantom.n_trees, phantom.capillary_density,
// phantom.branch_prob, phantom.noise_std, phantom.blur_radius,
// phantom.background_amp, phantom.thickness_contrast, phantom.seed,
// sweep.step, sweep.threshold. Unknown keys fail with their line number.

struct RunConfig {
    NetworkConfig network;
    TrainConfig train;
    PhantomConfig phantom;
    double sweep_step = 0.01;
    double sweep_threshold = 0.5;
};

RunConfig parse_run_config_text(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// --- CSV -----------------------------------------------------------------
// Fixed schema: w,vdi,vd,vlf,fd,vc,ni,dice,accuracy. Absent values are
// empty cells. Doubles use shortest round-trip formatting.

std::string format_double(double v);
std::string metrics_csv_header(bool with_w);
std::string metrics_csv_row(const MetricRecord& r, const double* w = nullptr);
std::string sweep_csv(const SweepResult& s);

// Whole-file atomic text write.
void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

} // namespace lal
