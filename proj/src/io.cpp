#include "bifurc/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bifurc/errors.hpp"

namespace bifurc {

Config parse_config(const std::string& json_text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SyntaxError(std::string("invalid JSON: ") + e.what(), e.byte);
    }
    if (!root.contains("version") || !root["version"].is_number_integer() ||
        root["version"].get<int>() != 1)
        throw Error(ErrorKind::Config, "config requires \"version\": 1");
    if (!root.contains("family")) throw Error(ErrorKind::Config, "config requires a family block");

    RepFamily family = parse_family(json_text);

    std::vector<std::pair<Word, double>> atoms;
    if (root.contains("walk")) {
        const nlohmann::json& walk = root["walk"];
        if (!walk.contains("measure"))
            throw Error(ErrorKind::Config, "walk block requires a measure");
        const nlohmann::json& measure = walk["measure"];
        if (measure.is_string()) {
            if (measure.get<std::string>() != "uniform-symmetric")
                throw Error(ErrorKind::Config,
                            "unknown measure '" + measure.get<std::string>() + "'");
            return {std::move(family), uniform_symmetric(root["family"]["generators"].size()),
                    root};
        }
        if (!measure.is_array())
            throw Error(ErrorKind::Config, "measure must be an atom list or 'uniform-symmetric'");
        for (const auto& atom : measure) {
            if (!atom.contains("word") || !atom.contains("p"))
                throw Error(ErrorKind::Config, "measure atoms need 'word' and 'p'");
            atoms.emplace_back(
                parse_word(atom["word"].get<std::string>(), family.generator_names()),
                atom["p"].get<double>());
        }
        StepMeasure mu(std::move(atoms));
        return {std::move(family), std::move(mu), root};
    }
    StepMeasure mu = uniform_symmetric(family.generator_count());
    return {std::move(family), std::move(mu), root};
}

Config load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Config, "cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Config, "cannot write file: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                   std::chars_format::general, 17);
    return std::string(buf.data(), ptr);
}

std::string encode_field_csv(const ScanField& field) {
    std::string out = "re,im,value,mask\n";
    const ScanGrid& g = field.grid;
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            std::size_t node = g.index(i, j);
            cplx z = g.node(i, j);
            out += format_double(z.real());
            out += ',';
            out += format_double(z.imag());
            out += ',';
            if (!field.mask[node]) out += format_double(field.values[node]);
            out += ',';
            out += field.mask[node] ? '1' : '0';
            out += '\n';
        }
    }
    return out;
}

namespace {

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw Error(ErrorKind::Config, "bad numeric field in CSV: '" + s + "'");
    return v;
}

}  // namespace

ScanField decode_field_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "re,im,value,mask")
        throw Error(ErrorKind::Config, "missing field CSV header");
    std::vector<double> res, ims, vals;
    std::vector<std::uint8_t> masks;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<std::string, 4> cols;
        std::size_t start = 0;
        for (std::size_t c = 0; c < 4; ++c) {
            std::size_t comma = (c < 3) ? line.find(',', start) : line.size();
            if (comma == std::string::npos)
                throw Error(ErrorKind::Config, "short CSV row: '" + line + "'");
            cols[c] = line.substr(start, comma - start);
            start = comma + 1;
        }
        res.push_back(parse_double(cols[0]));
        ims.push_back(parse_double(cols[1]));
        bool masked = cols[3] == "1";
        masks.push_back(masked ? 1 : 0);
        vals.push_back(masked ? 0.0 : parse_double(cols[2]));
    }
    if (res.size() < 4) throw Error(ErrorKind::Config, "field CSV too small");

    std::size_t nx = 1;
    while (nx < res.size() && ims[nx] == ims[0]) ++nx;
    if (res.size() % nx != 0)
        throw Error(ErrorKind::Config, "field CSV is not a full row-major grid");
    std::size_t ny = res.size() / nx;
    double hx = res[1] - res[0];
    double hy = (ny > 1) ? ims[nx] - ims[0] : 1.0;
    ScanGrid grid(res[0] - 0.5 * hx, res[0] - 0.5 * hx + hx * static_cast<double>(nx),
                  ims[0] - 0.5 * hy, ims[0] - 0.5 * hy + hy * static_cast<double>(ny), nx, ny);
    ScanField field(grid);
    field.values = std::move(vals);
    field.mask = std::move(masks);
    return field;
}

namespace {

std::array<std::uint8_t, 3> colormap_rgb(Colormap map, double t) {
    t = std::min(1.0, std::max(0.0, t));
    if (map == Colormap::Gray) {
        auto v = static_cast<std::uint8_t>(std::lround(t * 255.0));
        return {v, v, v};
    }
    // black -> red -> yellow -> white ramp
    double r = std::min(1.0, 3.0 * t);
    double g = std::min(1.0, std::max(0.0, 3.0 * t - 1.0));
    double b = std::min(1.0, std::max(0.0, 3.0 * t - 2.0));
    return {static_cast<std::uint8_t>(std::lround(r * 255.0)),
            static_cast<std::uint8_t>(std::lround(g * 255.0)),
            static_cast<std::uint8_t>(std::lround(b * 255.0))};
}

double percentile_of(std::vector<double> xs, double p) {
    if (xs.empty()) return 0.0;
    std::size_t k = static_cast<std::size_t>(p * static_cast<double>(xs.size() - 1));
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
    return xs[k];
}

}  // namespace

std::string encode_intensity_ppm(std::size_t width, std::size_t height,
                                 const std::vector<double>& intensity, Colormap map) {
    std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.reserve(out.size() + width * height * 3);
    for (std::size_t row = 0; row < height; ++row) {
        // row 0 of the image is the top: highest im index
        std::size_t j = height - 1 - row;
        for (std::size_t i = 0; i < width; ++i) {
            auto rgb = colormap_rgb(map, intensity[j * width + i]);
            out.push_back(static_cast<char>(rgb[0]));
            out.push_back(static_cast<char>(rgb[1]));
            out.push_back(static_cast<char>(rgb[2]));
        }
    }
    return out;
}

std::string encode_field_ppm(const ScanField& field, Colormap map, ImageScale scale) {
    const ScanGrid& g = field.grid;
    std::vector<double> intensity(g.size(), 0.0);
    if (scale == ImageScale::Linear) {
        double lo = field.min_unmasked(), hi = field.max_unmasked();
        double span = (hi > lo) ? hi - lo : 1.0;
        for (std::size_t node = 0; node < g.size(); ++node)
            if (!field.mask[node]) intensity[node] = (field.values[node] - lo) / span;
    } else {
        // log(1 + x / x90) with x90 the 90th percentile of positive values
        std::vector<double> positives;
        for (std::size_t node = 0; node < g.size(); ++node)
            if (!field.mask[node] && field.values[node] > 0.0)
                positives.push_back(field.values[node]);
        double x90 = percentile_of(positives, 0.9);
        if (x90 > 0.0) {
            double hi = 0.0;
            for (double v : positives) hi = std::max(hi, std::log1p(v / x90));
            if (hi == 0.0) hi = 1.0;
            for (std::size_t node = 0; node < g.size(); ++node)
                if (!field.mask[node] && field.values[node] > 0.0)
                    intensity[node] = std::log1p(field.values[node] / x90) / hi;
        }
    }
    return encode_intensity_ppm(g.nx, g.ny, intensity, map);
}

// ---- SHA-256 (FIPS 180-4) ----

namespace {

constexpr std::array<std::uint32_t, 64> kSha256K = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2};

inline std::uint32_t rotr(std::uint32_t x, unsigned n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    std::array<std::uint32_t, 8> h = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                      0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::string msg = bytes;
    std::uint64_t bit_len = static_cast<std::uint64_t>(bytes.size()) * 8;
    msg.push_back(static_cast<char>(0x80));
    while (msg.size() % 64 != 56) msg.push_back('\0');
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bit_len >> (8 * i)) & 0xff));

    std::array<std::uint32_t, 64> w{};
    for (std::size_t block = 0; block < msg.size(); block += 64) {
        for (std::size_t t = 0; t < 16; ++t) {
            w[t] = (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[block + 4 * t]))
                    << 24) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[block + 4 * t + 1]))
                    << 16) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[block + 4 * t + 2]))
                    << 8) |
                   static_cast<std::uint32_t>(static_cast<unsigned char>(msg[block + 4 * t + 3]));
        }
        for (std::size_t t = 16; t < 64; ++t) {
            std::uint32_t s0 = rotr(w[t - 15], 7) ^ rotr(w[t - 15], 18) ^ (w[t - 15] >> 3);
            std::uint32_t s1 = rotr(w[t - 2], 17) ^ rotr(w[t - 2], 19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16] + s0 + w[t - 7] + s1;
        }
        auto [a, b, c, d, e, f, g, hh] = h;
        for (std::size_t t = 0; t < 64; ++t) {
            std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            std::uint32_t ch = (e & f) ^ (~e & g);
            std::uint32_t temp1 = hh + s1 + ch + kSha256K[t] + w[t];
            std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            std::uint32_t temp2 = s0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + temp1;
            d = c;
            c = b;
            b = a;
            a = temp1 + temp2;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
        h[5] += f;
        h[6] += g;
        h[7] += hh;
    }

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint32_t word : h)
        for (int i = 7; i >= 0; --i) out.push_back(hex[(word >> (4 * i)) & 0xf]);
    return out;
}

std::string encode_cloud_csv(const std::vector<DivisorEntry>& entries) {
    std::string out = "re,im,mult,word_id\n";
    for (const DivisorEntry& e : entries) {
        out += format_double(e.location.real());
        out += ',';
        out += format_double(e.location.imag());
        out += ',';
        out += std::to_string(e.multiplicity);
        out += ',';
        out += std::to_string(e.word_id);
        out += '\n';
    }
    return out;
}

std::string encode_points_csv(const PointCloud& cloud) {
    std::string out;
    std::size_t d = cloud.points.empty() ? 0 : cloud.points[0].dim();
    for (std::size_t c = 0; c < d; ++c) {
        if (c) out += ',';
        out += "re" + std::to_string(c) + ",im" + std::to_string(c);
    }
    out += '\n';
    for (const ProjPoint& p : cloud.points) {
        for (std::size_t c = 0; c < d; ++c) {
            if (c) out += ',';
            out += format_double(p.coords[c].real());
            out += ',';
            out += format_double(p.coords[c].imag());
        }
        out += '\n';
    }
    return out;
}

}  // namespace bifurc
