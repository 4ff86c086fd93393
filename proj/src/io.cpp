#include "lal/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <type_traits>
#include <unordered_map>

namespace fs = std::filesystem;

namespace lal {

namespace {

std::string read_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    if (!f.good() && !f.eof()) throw IoError("read failed for " + path);
    return ss.str();
}

void write_binary_atomic(const std::string& path, const std::string& bytes) {
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f.good()) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("rename " + tmp.string() + " -> " + path + ": " + ec.message());
}

// --- PGM ---------------------------------------------------------------

struct PgmPayload {
    int h, w;
    const unsigned char* px; // h*w bytes inside the backing string
};

// Header: "P5", whitespace/comment-separated width, height, maxval, then a
// single whitespace byte before the raster.
PgmPayload parse_pgm(const std::string& bytes, const std::string& path) {
    size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
        const size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
               bytes[pos] != '#')
            ++pos;
        if (start == pos) throw IoError(path + ": truncated PGM header");
        return bytes.substr(start, pos - start);
    };
    auto next_int = [&](const char* what) {
        const std::string tok = next_token();
        int v = 0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size() || v <= 0)
            throw IoError(path + ": bad PGM " + what + " '" + tok + "'");
        return v;
    };

    const std::string magic = next_token();
    if (magic != "P5") throw IoError(path + ": not a binary PGM (magic '" + magic + "', want P5)");
    const int w = next_int("width");
    const int h = next_int("height");
    const int maxval = next_int("maxval");
    if (maxval != 255)
        throw IoError(path + ": only 8-bit PGM supported (maxval " + std::to_string(maxval) + ")");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw IoError(path + ": missing whitespace before PGM raster");
    ++pos;

    const size_t want = static_cast<size_t>(h) * static_cast<size_t>(w);
    const size_t have = bytes.size() - pos;
    if (have != want)
        throw IoError(path + ": PGM raster has " + std::to_string(have) + " bytes, expected " +
                      std::to_string(want));
    return {h, w, reinterpret_cast<const unsigned char*>(bytes.data() + pos)};
}

std::string pgm_bytes(int h, int w, const std::vector<unsigned char>& px) {
    std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.append(reinterpret_cast<const char*>(px.data()), px.size());
    return out;
}

// --- little-endian scalar packing --------------------------------------

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Cursor {
    const std::string& bytes;
    const std::string& path;
    size_t pos = 0;

    void need(size_t n, const char* what) const {
        if (bytes.size() - pos < n)
            throw IoError(path + ": truncated checkpoint reading " + what + " (need " +
                          std::to_string(n) + " bytes at offset " + std::to_string(pos) + ", have " +
                          std::to_string(bytes.size() - pos) + ")");
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str(size_t n, const char* what) {
        need(n, what);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

constexpr char kMagic[] = "LALCKPT";
constexpr char kVersion = 0x01;

std::string shape_str(const std::vector<int>& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out.empty() ? "scalar" : out;
}

} // namespace

void write_pgm(const std::string& path, const Image2D& image) {
    if (image.h <= 0 || image.w <= 0) throw ValueError("write_pgm: empty image");
    std::vector<unsigned char> px(image.px.size());
    for (size_t i = 0; i < px.size(); ++i) {
        const double b = std::floor(255.0 * image.px[i] + 0.5); // round half up
        px[i] = static_cast<unsigned char>(std::clamp(b, 0.0, 255.0));
    }
    write_binary_atomic(path, pgm_bytes(image.h, image.w, px));
}

void write_pgm(const std::string& path, const Mask2D& mask) {
    if (mask.h <= 0 || mask.w <= 0) throw ValueError("write_pgm: empty mask");
    std::vector<unsigned char> px(mask.bits.size());
    for (size_t i = 0; i < px.size(); ++i) px[i] = mask.bits[i] ? 255 : 0;
    write_binary_atomic(path, pgm_bytes(mask.h, mask.w, px));
}

Image2D read_pgm_image(const std::string& path) {
    const std::string bytes = read_binary(path);
    const PgmPayload p = parse_pgm(bytes, path);
    Image2D img(p.h, p.w);
    for (size_t i = 0; i < img.px.size(); ++i) img.px[i] = p.px[i] / 255.0;
    return img;
}

Mask2D read_pgm_mask(const std::string& path) {
    const std::string bytes = read_binary(path);
    const PgmPayload p = parse_pgm(bytes, path);
    Mask2D m(p.h, p.w);
    for (size_t i = 0; i < m.bits.size(); ++i) {
        if (p.px[i] == 0) continue;
        if (p.px[i] != 255)
            throw IoError(path + ": pixel (" + std::to_string(i / static_cast<size_t>(p.w)) + "," +
                          std::to_string(i % static_cast<size_t>(p.w)) + ") has value " +
                          std::to_string(p.px[i]) + "; mask files must be strictly {0, 255}");
        m.bits[i] = 1;
    }
    return m;
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
    const auto plan = parameter_plan(params.config);
    if (plan.size() != params.named.size())
        throw ValueError("save_checkpoint: params carry " + std::to_string(params.named.size()) +
                         " tensors, config expects " + std::to_string(plan.size()));
    std::string out(kMagic, 7);
    out.push_back(kVersion);
    put_u32(out, static_cast<uint32_t>(params.config.depth));
    put_u32(out, static_cast<uint32_t>(params.config.base_channels));
    put_u32(out, static_cast<uint32_t>(params.config.in_channels));
    put_u32(out, static_cast<uint32_t>(params.config.out_channels));
    put_u32(out, static_cast<uint32_t>(params.named.size()));
    for (size_t k = 0; k < params.named.size(); ++k) {
        const auto& [name, t] = params.named[k];
        if (name != plan[k].first || t->shape != plan[k].second)
            throw ValueError("save_checkpoint: tensor " + std::to_string(k) + " is '" + name + "' " +
                             t->shape_str() + ", expected '" + plan[k].first + "' " +
                             shape_str(plan[k].second));
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<uint32_t>(t->shape.size()));
        for (int d : t->shape) put_u32(out, static_cast<uint32_t>(d));
        for (double v : t->data) put_f64(out, v);
    }
    write_binary_atomic(path, out);
}

ModelParams load_checkpoint(const std::string& path) {
    const std::string bytes = read_binary(path);
    Cursor c{bytes, path};
    const std::string magic = c.str(7, "magic");
    if (magic != kMagic) throw IoError(path + ": not a checkpoint (bad magic)");
    const std::string ver = c.str(1, "version");
    if (ver[0] != kVersion)
        throw IoError(path + ": unsupported version " + std::to_string(static_cast<int>(ver[0])));

    ModelParams params;
    params.config.depth = static_cast<int>(c.u32("depth"));
    params.config.base_channels = static_cast<int>(c.u32("base_channels"));
    params.config.in_channels = static_cast<int>(c.u32("in_channels"));
    params.config.out_channels = static_cast<int>(c.u32("out_channels"));
    params.config.validate();

    const auto plan = parameter_plan(params.config);
    const uint32_t count = c.u32("tensor count");
    if (count != plan.size())
        throw IoError(path + ": " + std::to_string(count) + " tensors but config expects " +
                      std::to_string(plan.size()) +
                      (count < plan.size() ? "; first missing parameter: '" + plan[count].first + "'"
                                           : ""));
    for (size_t k = 0; k < plan.size(); ++k) {
        const uint32_t name_len = c.u32("name length");
        const std::string name = c.str(name_len, "tensor name");
        if (name != plan[k].first)
            throw IoError(path + ": tensor " + std::to_string(k) + " is '" + name + "', expected '" +
                          plan[k].first + "'");
        const uint32_t rank = c.u32("rank");
        std::vector<int> shape(rank);
        for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(c.u32("dim"));
        if (shape != plan[k].second)
            throw IoError(path + ": tensor '" + name + "' has shape " + shape_str(shape) +
                          ", expected " + shape_str(plan[k].second));
        auto t = make_tensor(shape, true);
        for (double& v : t->data) v = c.f64("tensor data");
        params.named.emplace_back(name, std::move(t));
    }
    if (c.pos != bytes.size())
        throw IoError(path + ": " + std::to_string(bytes.size() - c.pos) +
                      " trailing bytes after tensor table");
    return params;
}

namespace {

struct KeyValue {
    int line;
    std::string value;
};

int64_t parse_int(const std::string& v, const std::string& origin, int line) {
    int64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw IoError(origin + ":" + std::to_string(line) + ": expected integer, got '" + v + "'");
    return out;
}

double parse_real(const std::string& v, const std::string& origin, int line) {
    try {
        size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw IoError(origin + ":" + std::to_string(line) + ": expected number, got '" + v + "'");
    }
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::unordered_map<std::string, KeyValue> kv;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const size_t hash = raw.find('#');
        const std::string stripped = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (stripped.empty()) continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw IoError(origin + ":" + std::to_string(line) + ": expected key=value, got '" +
                          stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw IoError(origin + ":" + std::to_string(line) + ": empty key");
        kv[key] = {line, value}; // later lines win
    }

    auto take = [&](const char* key) -> std::optional<KeyValue> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        auto out = it->second;
        kv.erase(it);
        return out;
    };
    auto as_int = [&](const char* key, auto& field) {
        if (auto v = take(key)) field = static_cast<std::remove_reference_t<decltype(field)>>(
                                     parse_int(v->value, origin, v->line));
    };
    auto as_real = [&](const char* key, double& field) {
        if (auto v = take(key)) field = parse_real(v->value, origin, v->line);
    };

    as_int("net.depth", cfg.network.depth);
    as_int("net.base_channels", cfg.network.base_channels);
    as_int("train.epochs", cfg.train.epochs);
    as_int("train.batch_size", cfg.train.batch_size);
    as_real("train.lr", cfg.train.lr);
    if (auto v = take("train.optimizer")) cfg.train.optimizer = v->value;
    as_real("train.beta1", cfg.train.beta1);
    as_real("train.beta2", cfg.train.beta2);
    as_real("train.eps", cfg.train.eps);
    as_int("train.seed", cfg.train.seed);
    if (auto v = take("train.fixed_w")) cfg.train.fixed_w = parse_real(v->value, origin, v->line);
    as_int("phantom.size", cfg.phantom.size);
    as_int("phantom.n_trees", cfg.phantom.n_trees);
    as_real("phantom.capillary_density", cfg.phantom.capillary_density);
    as_real("phantom.branch_prob", cfg.phantom.branch_prob);
    as_real("phantom.noise_std", cfg.phantom.noise_std);
    as_real("phantom.blur_radius", cfg.phantom.blur_radius);
    as_real("phantom.background_amp", cfg.phantom.background_amp);
    as_real("phantom.thickness_contrast", cfg.phantom.thickness_contrast);
    as_int("phantom.seed", cfg.phantom.seed);
    as_real("sweep.step", cfg.sweep_step);
    as_real("sweep.threshold", cfg.sweep_threshold);

    if (!kv.empty()) {
        const KeyValue* first = nullptr;
        std::string name;
        for (const auto& [k, v] : kv)
            if (!first || v.line < first->line) {
                first = &v;
                name = k;
            }
        throw IoError(origin + ":" + std::to_string(first->line) + ": unknown key '" + name + "'");
    }

    cfg.network.validate();
    cfg.train.validate();
    cfg.phantom.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config_text(read_binary(path), path);
}

std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string metrics_csv_header(bool with_w) {
    return with_w ? "w,vdi,vd,vlf,fd,vc,ni,dice,accuracy" : "vdi,vd,vlf,fd,vc,ni,dice,accuracy";
}

std::string metrics_csv_row(const MetricRecord& r, const double* w) {
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    std::string row;
    if (w) row += format_double(*w) + ",";
    row += opt(r.vdi) + "," + format_double(r.vd) + "," + format_double(r.vlf) + "," + opt(r.fd) +
           "," + format_double(r.vc) + "," + std::to_string(r.ni) + "," + opt(r.dice) + "," +
           opt(r.accuracy);
    return row;
}

std::string sweep_csv(const SweepResult& s) {
    std::string out = metrics_csv_header(true) + "\n";
    for (size_t i = 0; i < s.grid.size(); ++i)
        out += metrics_csv_row(s.records[i], &s.grid[i]) + "\n";
    return out;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    write_binary_atomic(path, content);
}

std::string read_text(const std::string& path) { return read_binary(path); }

} // namespace lal
