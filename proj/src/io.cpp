#include "sphenc/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace sphenc {

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'P', 'H', 'E', 'N', 'C', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr int kMaxImageSide = 32768;

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t remaining() const { return data_.size() - pos_; }

    const std::uint8_t* take(std::size_t n, const char* what) {
        if (remaining() < n) throw io_error(std::string("unexpected end of data in ") + what);
        const std::uint8_t* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }

    std::uint8_t u8(const char* what) { return *take(1, what); }

    std::uint32_t u32(const char* what) {
        const std::uint8_t* p = take(4, what);
        return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
               std::uint32_t(p[3]) << 24;
    }

    std::uint64_t u64(const char* what) {
        std::uint64_t lo = u32(what), hi = u32(what);
        return lo | hi << 32;
    }

    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

struct ByteWriter {
    std::vector<std::uint8_t> out;

    void u8(std::uint8_t v) { out.push_back(v); }
    void u32(std::uint32_t v) {
        out.push_back(std::uint8_t(v));
        out.push_back(std::uint8_t(v >> 8));
        out.push_back(std::uint8_t(v >> 16));
        out.push_back(std::uint8_t(v >> 24));
    }
    void u64(std::uint64_t v) {
        u32(std::uint32_t(v));
        u32(std::uint32_t(v >> 32));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
};

void rgbe_to_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b, std::uint8_t e, float* out) {
    if (e == 0) {
        out[0] = out[1] = out[2] = 0.0f;
        return;
    }
    double s = std::ldexp(1.0, int(e) - 136);
    out[0] = float(r * s);
    out[1] = float(g * s);
    out[2] = float(b * s);
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open " + path);
    f.seekg(0, std::ios::end);
    auto len = f.tellg();
    if (len < 0) throw io_error("cannot stat " + path);
    f.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
    if (len > 0) f.read(reinterpret_cast<char*>(bytes.data()), len);
    if (!f) throw io_error("short read from " + path);
    return bytes;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot create " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw io_error("short write to " + path);
}

// ---------------------------------------------------------------------------
// Radiance RGBE

EnvMap decode_hdr(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto read_line = [&]() -> std::string {
        std::string line;
        while (pos < bytes.size()) {
            char c = char(bytes[pos++]);
            if (c == '\n') return line;
            line.push_back(c);
            if (line.size() > 4096) throw io_error("radiance: header line too long");
        }
        throw io_error("radiance: unexpected end of header");
    };

    std::string signature = read_line();
    if (signature.rfind("#?", 0) != 0) throw io_error("radiance: missing #? signature");

    bool format_seen = false;
    for (;;) {
        std::string line = read_line();
        if (line.empty()) break;
        if (line[0] == '#') continue;
        if (line.rfind("FORMAT=", 0) == 0) {
            if (line != "FORMAT=32-bit_rle_rgbe")
                throw io_error("radiance: unsupported format '" + line + "'");
            format_seen = true;
        }
        // EXPOSURE / COLORCORR / custom variables are ignored.
    }
    if (!format_seen) throw io_error("radiance: missing FORMAT line");

    std::string res = read_line();
    int w = 0, h = 0;
    if (std::sscanf(res.c_str(), "-Y %d +X %d", &h, &w) != 2)
        throw io_error("radiance: unsupported resolution line '" + res + "'");
    if (w < 1 || h < 1 || w > kMaxImageSide || h > kMaxImageSide)
        throw io_error("radiance: bad image dimensions");

    EnvMap map = make_envmap(w, h);
    ByteReader r(bytes.subspan(pos));
    std::vector<std::uint8_t> plan(4 * std::size_t(w));  // channel-planar scanline

    for (int y = 0; y < h; ++y) {
        const std::uint8_t* head = r.take(4, "radiance scanline");
        bool rle = head[0] == 2 && head[1] == 2 && (head[2] & 0x80) == 0;
        if (rle) {
            if ((int(head[2]) << 8 | head[3]) != w)
                throw io_error("radiance: scanline width mismatch");
            for (int c = 0; c < 4; ++c) {
                std::uint8_t* chan = plan.data() + std::size_t(c) * std::size_t(w);
                int x = 0;
                while (x < w) {
                    int count = r.u8("radiance rle op");
                    if (count > 128) {
                        count -= 128;
                        if (x + count > w) throw io_error("radiance: rle run overflows scanline");
                        std::uint8_t v = r.u8("radiance rle run");
                        std::fill(chan + x, chan + x + count, v);
                    } else {
                        if (count == 0) throw io_error("radiance: zero-length rle op");
                        if (x + count > w) throw io_error("radiance: rle literal overflows scanline");
                        const std::uint8_t* src = r.take(std::size_t(count), "radiance rle literal");
                        std::copy(src, src + count, chan + x);
                    }
                    x += count;
                }
            }
            for (int x = 0; x < w; ++x)
                rgbe_to_rgb(plan[std::size_t(x)], plan[std::size_t(w + x)],
                            plan[std::size_t(2 * w + x)], plan[std::size_t(3 * w + x)],
                            map.texel(x, y));
        } else {
            // Flat scanline; `head` is already its first pixel.
            const std::uint8_t* px = head;
            for (int x = 0;; ++x) {
                if (px[0] == 1 && px[1] == 1 && px[2] == 1)
                    throw io_error("radiance: old-style rle scanlines are not supported");
                rgbe_to_rgb(px[0], px[1], px[2], px[3], map.texel(x, y));
                if (x + 1 >= w) break;
                px = r.take(4, "radiance pixel");
            }
        }
    }
    return map;
}

// ---------------------------------------------------------------------------
// PFM

namespace {

std::string pfm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) {
        tok.push_back(char(bytes[pos++]));
        if (tok.size() > 64) throw io_error("pfm: header token too long");
    }
    if (tok.empty()) throw io_error("pfm: unexpected end of header");
    return tok;
}

int pfm_int(std::span<const std::uint8_t> bytes, std::size_t& pos, const char* what) {
    std::string tok = pfm_token(bytes, pos);
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &used);
    } catch (const std::exception&) {
        throw io_error(std::string("pfm: bad ") + what);
    }
    if (used != tok.size()) throw io_error(std::string("pfm: bad ") + what);
    return v;
}

}  // namespace

EnvMap decode_pfm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    std::string magic = pfm_token(bytes, pos);
    if (magic == "Pf") throw io_error("pfm: grayscale images are not supported");
    if (magic != "PF") throw io_error("pfm: missing PF signature");

    int w = pfm_int(bytes, pos, "width");
    int h = pfm_int(bytes, pos, "height");
    if (w < 1 || h < 1 || w > kMaxImageSide || h > kMaxImageSide)
        throw io_error("pfm: bad image dimensions");

    std::string scale_tok = pfm_token(bytes, pos);
    double scale = 0.0;
    try {
        std::size_t used = 0;
        scale = std::stod(scale_tok, &used);
        if (used != scale_tok.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw io_error("pfm: bad scale field");
    }
    if (scale == 0.0) throw io_error("pfm: zero scale");

    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw io_error("pfm: missing data separator");
    ++pos;

    bool little = scale < 0.0;
    std::size_t need = std::size_t(w) * std::size_t(h) * 3 * 4;
    if (bytes.size() - pos < need) throw io_error("pfm: truncated pixel data");

    EnvMap map = make_envmap(w, h);
    const std::uint8_t* p = bytes.data() + pos;
    for (int row = 0; row < h; ++row) {
        float* dst = map.texel(0, h - 1 - row);  // file rows run bottom to top
        for (int i = 0; i < 3 * w; ++i, p += 4) {
            std::uint32_t u = little ? std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                                           std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24
                                     : std::uint32_t(p[3]) | std::uint32_t(p[2]) << 8 |
                                           std::uint32_t(p[1]) << 16 | std::uint32_t(p[0]) << 24;
            dst[i] = std::bit_cast<float>(u);
        }
    }
    return map;
}

std::vector<std::uint8_t> encode_pfm(const EnvMap& map) {
    char header[64];
    int n = std::snprintf(header, sizeof header, "PF\n%d %d\n-1\n", map.width, map.height);
    ByteWriter w;
    w.bytes(header, std::size_t(n));
    for (int row = map.height - 1; row >= 0; --row) {
        const float* src = map.texel(0, row);
        for (int i = 0; i < 3 * map.width; ++i) w.f32(src[i]);
    }
    return std::move(w.out);
}

EnvMap load_envmap(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    if (ext == ".hdr" || ext == ".pic" || ext == ".rgbe") return decode_hdr(read_file(path));
    if (ext == ".pfm") return decode_pfm(read_file(path));
    throw io_error("unsupported image extension on " + path);
}

void save_pfm(const std::string& path, const EnvMap& map) {
    auto bytes = encode_pfm(map);
    write_file(path, bytes);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void write_hash_config(ByteWriter& w, const HashConfig& h) {
    w.u32(h.table_cap);
    w.u32(h.gamma);
    for (auto p : h.sphere_primes) w.u32(p);
    for (auto p : h.joint_spatial_primes) w.u32(p);
    for (auto p : h.joint_dir_primes) w.u32(p);
}

HashConfig read_hash_config(ByteReader& r) {
    HashConfig h;
    h.table_cap = r.u32("hash config");
    h.gamma = r.u32("hash config");
    for (auto& p : h.sphere_primes) p = r.u32("hash config");
    for (auto& p : h.joint_spatial_primes) p = r.u32("hash config");
    for (auto& p : h.joint_dir_primes) p = r.u32("hash config");
    return h;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model<float>& model) {
    ByteWriter w;
    w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.u32(std::uint32_t(model.enc.kind));

    const HashSphereConfig& s = model.enc.sphere;
    w.u32(std::uint32_t(s.levels));
    w.u32(std::uint32_t(s.features));
    write_hash_config(w, s.hash);

    const JointConfig& j = model.enc.joint;
    w.u32(std::uint32_t(j.levels));
    w.u32(std::uint32_t(j.dir_levels_cap));
    w.u32(std::uint32_t(j.features));
    w.u32(j.base_resolution);
    w.f64(j.per_level_scale);
    w.f64(j.box_min.x);
    w.f64(j.box_min.y);
    w.f64(j.box_min.z);
    w.f64(j.box_max.x);
    w.f64(j.box_max.y);
    w.f64(j.box_max.z);
    write_hash_config(w, j.hash);

    const GridEncodingConfig& g = model.enc.grid;
    w.u32(std::uint32_t(g.dims));
    w.u32(std::uint32_t(g.levels));
    w.u32(std::uint32_t(g.features));
    w.u32(g.base_resolution);
    w.f64(g.per_level_scale);
    w.u32(g.table_cap);
    for (auto p : g.primes) w.u32(p);

    const MLPConfig& m = model.mlp_cfg;
    w.u32(std::uint32_t(m.input_width));
    w.u32(std::uint32_t(m.hidden_layers));
    w.u32(std::uint32_t(m.hidden_width));
    w.u32(std::uint32_t(m.output_width));
    w.u32(std::uint32_t(m.hidden_activation));
    w.u32(std::uint32_t(m.output_activation));

    w.u64(model.seed);
    w.u32(model.trained_steps);

    w.u32(std::uint32_t(model.tables.size()));
    w.u32(std::uint32_t(model.mlp.layers.size()));
    for (const auto& t : model.tables) w.u64(t.size());
    for (const auto& l : model.mlp.layers) {
        w.u32(std::uint32_t(l.in));
        w.u32(std::uint32_t(l.out));
    }

    auto write_floats = [&w](std::span<const float> v) {
        if constexpr (std::endian::native == std::endian::little) {
            w.bytes(v.data(), v.size() * 4);
        } else {
            for (float f : v) w.f32(f);
        }
    };
    for (const auto& t : model.tables) write_floats(t);
    for (const auto& l : model.mlp.layers) {
        write_floats(l.w);
        write_floats(l.b);
    }
    return std::move(w.out);
}

Model<float> decode_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const std::uint8_t* magic = r.take(sizeof kCheckpointMagic, "checkpoint magic");
    if (std::memcmp(magic, kCheckpointMagic, sizeof kCheckpointMagic) != 0)
        throw io_error("checkpoint: bad magic");
    if (r.u32("checkpoint version") != kCheckpointVersion)
        throw io_error("checkpoint: unsupported version");

    std::uint32_t kind = r.u32("checkpoint header");
    if (kind > 3) throw io_error("checkpoint: unknown encoder kind");

    EncoderSettings enc;
    enc.kind = EncoderKind(kind);

    enc.sphere.levels = int(r.u32("checkpoint header"));
    enc.sphere.features = int(r.u32("checkpoint header"));
    enc.sphere.hash = read_hash_config(r);

    enc.joint.levels = int(r.u32("checkpoint header"));
    enc.joint.dir_levels_cap = int(r.u32("checkpoint header"));
    enc.joint.features = int(r.u32("checkpoint header"));
    enc.joint.base_resolution = r.u32("checkpoint header");
    enc.joint.per_level_scale = r.f64("checkpoint header");
    enc.joint.box_min = {r.f64("checkpoint header"), r.f64("checkpoint header"),
                         r.f64("checkpoint header")};
    enc.joint.box_max = {r.f64("checkpoint header"), r.f64("checkpoint header"),
                         r.f64("checkpoint header")};
    enc.joint.hash = read_hash_config(r);

    enc.grid.dims = int(r.u32("checkpoint header"));
    enc.grid.levels = int(r.u32("checkpoint header"));
    enc.grid.features = int(r.u32("checkpoint header"));
    enc.grid.base_resolution = r.u32("checkpoint header");
    enc.grid.per_level_scale = r.f64("checkpoint header");
    enc.grid.table_cap = r.u32("checkpoint header");
    for (auto& p : enc.grid.primes) p = r.u32("checkpoint header");

    MLPConfig mlp_cfg;
    mlp_cfg.input_width = int(r.u32("checkpoint header"));
    mlp_cfg.hidden_layers = int(r.u32("checkpoint header"));
    mlp_cfg.hidden_width = int(r.u32("checkpoint header"));
    mlp_cfg.output_width = int(r.u32("checkpoint header"));
    std::uint32_t hact = r.u32("checkpoint header");
    std::uint32_t oact = r.u32("checkpoint header");
    if (hact > 2 || oact > 2) throw io_error("checkpoint: unknown activation");
    mlp_cfg.hidden_activation = Activation(hact);
    mlp_cfg.output_activation = OutputActivation(oact);

    std::uint64_t seed = r.u64("checkpoint header");
    std::uint32_t trained_steps = r.u32("checkpoint header");
    std::uint32_t table_count = r.u32("checkpoint header");
    std::uint32_t layer_count = r.u32("checkpoint header");

    try {
        validate(enc);
        validate(mlp_cfg);
    } catch (const config_error& e) {
        throw io_error(std::string("checkpoint: invalid configuration: ") + e.what());
    }
    if (mlp_cfg.input_width != feature_dim(enc))
        throw io_error("checkpoint: mlp input width does not match the encoder");

    std::vector<std::uint64_t> rows = level_rows(enc);
    const std::uint64_t features = std::uint64_t(encoder_features(enc));
    if (table_count != rows.size()) throw io_error("checkpoint: table count mismatch");
    if (int(layer_count) != mlp_cfg.layer_count()) throw io_error("checkpoint: layer count mismatch");

    std::uint64_t total_floats = 0;
    std::vector<std::uint64_t> table_sizes(table_count);
    for (std::uint32_t t = 0; t < table_count; ++t) {
        table_sizes[t] = r.u64("checkpoint table sizes");
        if (table_sizes[t] != rows[t] * features) throw io_error("checkpoint: table size mismatch");
        total_floats += table_sizes[t];
    }
    std::vector<std::pair<int, int>> layer_dims(layer_count);
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        int in = int(r.u32("checkpoint layer dims"));
        int out = int(r.u32("checkpoint layer dims"));
        if (in != mlp_cfg.layer_in(int(i)) || out != mlp_cfg.layer_out(int(i)))
            throw io_error("checkpoint: layer shape mismatch");
        layer_dims[i] = {in, out};
        total_floats += std::uint64_t(in) * std::uint64_t(out) + std::uint64_t(out);
    }
    if (r.remaining() != total_floats * 4)
        throw io_error("checkpoint: payload size mismatch (truncated or trailing data)");

    auto read_floats = [&r](std::vector<float>& v, std::uint64_t n) {
        v.resize(std::size_t(n));
        const std::uint8_t* p = r.take(std::size_t(n) * 4, "checkpoint payload");
        if constexpr (std::endian::native == std::endian::little) {
            std::memcpy(v.data(), p, std::size_t(n) * 4);
        } else {
            for (std::uint64_t i = 0; i < n; ++i) {
                std::uint32_t u = std::uint32_t(p[4 * i]) | std::uint32_t(p[4 * i + 1]) << 8 |
                                  std::uint32_t(p[4 * i + 2]) << 16 |
                                  std::uint32_t(p[4 * i + 3]) << 24;
                v[std::size_t(i)] = std::bit_cast<float>(u);
            }
        }
    };

    Model<float> model;
    model.enc = enc;
    model.mlp_cfg = mlp_cfg;
    model.seed = seed;
    model.trained_steps = trained_steps;
    model.tables.resize(table_count);
    for (std::uint32_t t = 0; t < table_count; ++t) read_floats(model.tables[t], table_sizes[t]);
    model.mlp.layers.resize(layer_count);
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        auto& layer = model.mlp.layers[i];
        layer.in = layer_dims[i].first;
        layer.out = layer_dims[i].second;
        read_floats(layer.w, std::uint64_t(layer.in) * std::uint64_t(layer.out));
        read_floats(layer.b, std::uint64_t(layer.out));
    }
    if (uses_geodesic_grid(enc.kind))
        model.grid = std::make_shared<GeodesicGrid>(geodesic_tables_needed(enc));
    return model;
}

void save_checkpoint(const std::string& path, const Model<float>& model) {
    auto bytes = encode_checkpoint(model);
    write_file(path, bytes);
}

Model<float> load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

// ---------------------------------------------------------------------------
// CSV reports

namespace {

std::string fmt_g17(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string csv_header() {
    std::string s =
        "encoder,seed,levels,features,table_cap,steps,batch,lr,"
        "enc_params,mlp_params,enc_bytes,mlp_bytes,index_table_bytes,"
        "initial_rel_l2,final_rel_l2,final_psnr,train_rel_l2,novel_rel_l2";
    for (int j = 0; j < 18; ++j) {
        char buf[16];
        std::snprintf(buf, sizeof buf, ",band_%02d", j);
        s += buf;
    }
    s += '\n';
    return s;
}

std::string csv_row(const TrainReport& rep) {
    std::string s;
    s += rep.encoder;
    s += ',' + std::to_string(rep.seed);
    s += ',' + std::to_string(rep.levels);
    s += ',' + std::to_string(rep.features);
    s += ',' + std::to_string(rep.table_cap);
    s += ',' + std::to_string(rep.steps);
    s += ',' + std::to_string(rep.batch);
    s += ',' + fmt_g17(rep.lr);
    s += ',' + std::to_string(rep.enc_params);
    s += ',' + std::to_string(rep.mlp_params);
    s += ',' + std::to_string(rep.enc_bytes);
    s += ',' + std::to_string(rep.mlp_bytes);
    s += ',' + std::to_string(rep.index_table_bytes);
    s += ',' + fmt_g17(rep.initial_rel_l2);
    s += ',' + fmt_g17(rep.final_rel_l2);
    s += ',' + fmt_g17(rep.final_psnr);
    s += ',' + fmt_g17(rep.train_rel_l2);
    s += ',' + fmt_g17(rep.novel_rel_l2);
    for (double b : rep.band_rel_err) s += ',' + fmt_g17(b);
    s += '\n';
    return s;
}

void write_csv(const std::string& path, std::span<const TrainReport> reports) {
    std::string s = csv_header();
    for (const auto& rep : reports) s += csv_row(rep);
    write_file(path, std::span<const std::uint8_t>(
                         reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace sphenc
