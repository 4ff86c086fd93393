// Command-line front end: phantom generation, training, w-sweep analysis,
// uncertainty denoising, and metric evaluation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lal/io.hpp"
#include "lal/morphology.hpp"
#include "lal/sweep.hpp"

namespace fs = std::filesystem;
using namespace lal;

namespace {

std::string sample_dir_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%04d", i);
    return buf;
}

int run_gen(const std::string& config_path, int count, const std::string& out_dir) {
    if (count < 1) throw ValueError("--count must be >= 1, got " + std::to_string(count));
    const RunConfig cfg = load_run_config(config_path);
    fs::create_directories(out_dir);
    for (int i = 0; i < count; ++i) {
        const Phantom ph = make_phantom(cfg.phantom, cfg.phantom.seed + static_cast<uint64_t>(i));
        const fs::path dir = fs::path(out_dir) / sample_dir_name(i);
        fs::create_directories(dir);
        write_pgm((dir / "image.pgm").string(), ph.image);
        write_pgm((dir / "pixel.pgm").string(), ph.labels.pixel);
        write_pgm((dir / "skeleton.pgm").string(), ph.labels.skeleton);
    }
    std::cout << "wrote " << count << " samples to " << out_dir << "\n";
    return 0;
}

std::vector<Phantom> load_dataset(const std::string& data_dir) {
    if (!fs::is_directory(data_dir)) throw IoError(data_dir + " is not a directory");
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(data_dir))
        if (e.is_directory() && fs::exists(e.path() / "image.pgm")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty())
        throw IoError("no sample directories (containing image.pgm) under " + data_dir);
    std::vector<Phantom> out;
    out.reserve(dirs.size());
    for (const auto& d : dirs) {
        Phantom p;
        p.image = read_pgm_image((d / "image.pgm").string());
        p.labels.pixel = read_pgm_mask((d / "pixel.pgm").string());
        p.labels.skeleton = read_pgm_mask((d / "skeleton.pgm").string());
        out.push_back(std::move(p));
    }
    return out;
}

int run_train(const std::string& data_dir, const std::string& config_path, const std::string& out_ckpt,
              const std::string& log_csv) {
    const RunConfig cfg = load_run_config(config_path);
    const std::vector<Phantom> dataset = load_dataset(data_dir);
    std::cout << "training on " << dataset.size() << " samples\n";
    ModelParams params = build_unet_lal(cfg.network, cfg.train.seed);
    const TrainReport report = train(params, dataset, cfg.train, [](int epoch, double loss) {
        std::cout << "epoch " << epoch << " loss " << format_double(loss) << "\n";
    });
    save_checkpoint(out_ckpt, params);
    if (!log_csv.empty()) {
        std::string csv = "epoch,loss\n";
        for (size_t e = 0; e < report.epoch_loss.size(); ++e)
            csv += std::to_string(e) + "," + format_double(report.epoch_loss[e]) + "\n";
        write_text_atomic(log_csv, csv);
    }
    std::cout << "saved " << out_ckpt << "\n";
    return 0;
}

std::string mask_file_name(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "mask_w%.2f.pgm", w);
    return buf;
}

std::string recommend_report(const RecommendResult& r) {
    std::string out = "w_star " + format_double(r.w_star) + "\n";
    out += "points " + std::to_string(r.ws.size()) + "\n";
    out += "w,vdi_raw,vdi_smoothed,kappa\n";
    for (size_t i = 0; i < r.ws.size(); ++i)
        out += format_double(r.ws[i]) + "," + format_double(r.raw[i]) + "," +
               format_double(r.smoothed[i]) + "," + format_double(r.curvature[i]) + "\n";
    return out;
}

int run_sweep(const std::string& ckpt, const std::string& image_path, const std::string& out_dir,
              double step, double threshold) {
    const ModelParams params = load_checkpoint(ckpt);
    const Image2D image = read_pgm_image(image_path);
    const SweepResult result = sweep(params, image, step, threshold);
    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    for (size_t i = 0; i < result.grid.size(); ++i)
        write_pgm((out / mask_file_name(result.grid[i])).string(), result.masks[i]);
    write_text_atomic((out / "curves.csv").string(), sweep_csv(result));
    write_pgm((out / "uncertainty.pgm").string(), uncertainty_map(result));
    try {
        const RecommendResult rec = recommend_w(result);
        write_text_atomic((out / "recommend.txt").string(), recommend_report(rec));
        std::cout << "recommended w " << format_double(rec.w_star) << "\n";
    } catch (const Error& e) {
        // flat curve, or too few non-empty masks to fit one: report, don't fail
        write_text_atomic((out / "recommend.txt").string(), std::string(e.what()) + "\n");
        std::cout << "no recommendation: " << e.what() << "\n";
    }
    std::cout << "wrote " << result.grid.size() << " masks, curves.csv, uncertainty.pgm to "
              << out_dir << "\n";
    return 0;
}

int run_denoise(const std::string& mask_path, const std::string& unc_path, const std::string& out_path) {
    const Mask2D mask = read_pgm_mask(mask_path);
    const Image2D unc = read_pgm_image(unc_path);
    const Mask2D cleaned = denoise(mask, unc);
    write_pgm(out_path, cleaned);
    std::cout << "removed " << (mask.popcount() - cleaned.popcount()) << " pixels\n";
    return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path, const std::string& gt_skel_path) {
    const Mask2D pred = read_pgm_mask(pred_path);
    const Mask2D gt = read_pgm_mask(gt_path);
    const Mask2D skel = skeletonize(pred);
    const MetricRecord rec = compute_metrics(pred, skel, &gt);
    std::cout << metrics_csv_header(false) << "\n" << metrics_csv_row(rec) << "\n";
    if (!gt_skel_path.empty()) {
        const Mask2D gt_skel = read_pgm_mask(gt_skel_path);
        require_same_shape(pred, gt_skel, "eval");
        // fraction of ground-truth skeleton pixels within 1 pixel of the prediction
        long hit = 0;
        const long total = gt_skel.popcount();
        for (int i = 0; i < gt_skel.h; ++i)
            for (int j = 0; j < gt_skel.w; ++j) {
                if (!gt_skel.at(i, j)) continue;
                bool near = false;
                for (int di = -1; di <= 1 && !near; ++di)
                    for (int dj = -1; dj <= 1 && !near; ++dj)
                        if (pred.in_bounds(i + di, j + dj) && pred.at(i + di, j + dj)) near = true;
                hit += near;
            }
        const double coverage = total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
        std::cout << "# skeleton_coverage=" << format_double(coverage) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adjustable skeleton-to-pixel vessel segmentation"};
    app.require_subcommand(1);

    std::string config_path, out_path, data_dir, ckpt_path, image_path, log_csv;
    std::string mask_path, unc_path, pred_path, gt_path, gt_skel_path;
    int count = 1;
    double step = 0.01, threshold = 0.5;

    CLI::App* gen = app.add_subcommand("gen", "generate phantom samples");
    gen->add_option("--config", config_path, "run config file")->required();
    gen->add_option("--count", count, "number of samples")->required();
    gen->add_option("--out", out_path, "output directory")->required();

    CLI::App* train = app.add_subcommand("train", "train a model on a sample directory");
    train->add_option("--data", data_dir, "sample directory (from gen)")->required();
    train->add_option("--config", config_path, "run config file")->required();
    train->add_option("--out", ckpt_path, "output checkpoint")->required();
    train->add_option("--log", log_csv, "loss log CSV");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run the w sweep on one image");
    sweep_cmd->add_option("--ckpt", ckpt_path, "model checkpoint")->required();
    sweep_cmd->add_option("--image", image_path, "input image (PGM)")->required();
    sweep_cmd->add_option("--out", out_path, "output directory")->required();
    sweep_cmd->add_option("--step", step, "w grid step (hundredths)");
    sweep_cmd->add_option("--threshold", threshold, "binarization threshold");

    CLI::App* den = app.add_subcommand("denoise", "remove small high-uncertainty components");
    den->add_option("--mask", mask_path, "input mask (PGM)")->required();
    den->add_option("--uncertainty", unc_path, "uncertainty map (PGM)")->required();
    den->add_option("--out", out_path, "output mask")->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "score a prediction against ground truth");
    eval_cmd->add_option("--pred", pred_path, "predicted mask (PGM)")->required();
    eval_cmd->add_option("--gt", gt_path, "ground-truth mask (PGM)")->required();
    eval_cmd->add_option("--gt-skeleton", gt_skel_path, "ground-truth skeleton (PGM)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints help or the error
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(gen)) return run_gen(config_path, count, out_path);
        if (app.got_subcommand(train)) return run_train(data_dir, config_path, ckpt_path, log_csv);
        if (app.got_subcommand(sweep_cmd))
            return run_sweep(ckpt_path, image_path, out_path, step, threshold);
        if (app.got_subcommand(den)) return run_denoise(mask_path, unc_path, out_path);
        if (app.got_subcommand(eval_cmd)) return run_eval(pred_path, gt_path, gt_skel_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
