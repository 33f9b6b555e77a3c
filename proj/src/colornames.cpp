#include <occtrack/colornames.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace occtrack {

namespace {

struct Lab {
    double l, a, b;
};

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

Lab to_lab(double r, double g, double b) {
    const double rl = srgb_to_linear(r / 255.0);
    const double gl = srgb_to_linear(g / 255.0);
    const double bl = srgb_to_linear(b / 255.0);
    // D65 white.
    const double x = (0.4124 * rl + 0.3576 * gl + 0.1805 * bl) / 0.95047;
    const double y = 0.2126 * rl + 0.7152 * gl + 0.0722 * bl;
    const double z = (0.0193 * rl + 0.1192 * gl + 0.9505 * bl) / 1.08883;
    auto f = [](double t) { return t > 0.008856 ? std::cbrt(t) : 7.787 * t + 16.0 / 116.0; };
    return {116.0 * f(y) - 16.0, 500.0 * (f(x) - f(y)), 200.0 * (f(y) - f(z))};
}

// Prototype colors in kColorNames order.
constexpr double kPrototypes[ColorNameTable::kNames][3] = {
    {0, 0, 0},       {0, 0, 255},     {139, 69, 19},  {128, 128, 128}, {0, 200, 0},    {255, 140, 0},
    {255, 160, 200}, {128, 0, 128},   {255, 0, 0},    {255, 255, 255}, {255, 255, 0},
};

constexpr double kTemperature = 15.0; // Lab units

std::vector<float> build_table() {
    std::array<Lab, ColorNameTable::kNames> proto{};
    for (int k = 0; k < ColorNameTable::kNames; ++k) {
        proto[k] = to_lab(kPrototypes[k][0], kPrototypes[k][1], kPrototypes[k][2]);
    }
    std::vector<float> values(static_cast<std::size_t>(ColorNameTable::kRows) * ColorNameTable::kNames);
    for (int bq = 0; bq < 32; ++bq) {
        for (int gq = 0; gq < 32; ++gq) {
            for (int rq = 0; rq < 32; ++rq) {
                // Bin representative: 0 and 255 map onto the extreme bins exactly.
                const Lab c = to_lab(rq * 255.0 / 31.0, gq * 255.0 / 31.0, bq * 255.0 / 31.0);
                std::array<double, ColorNameTable::kNames> logits{};
                double best = -1e300;
                for (int k = 0; k < ColorNameTable::kNames; ++k) {
                    const double dl = c.l - proto[k].l, da = c.a - proto[k].a, db = c.b - proto[k].b;
                    logits[k] = -(dl * dl + da * da + db * db) / (2.0 * kTemperature * kTemperature);
                    best = std::max(best, logits[k]);
                }
                double sum = 0;
                for (auto &v : logits) {
                    v = std::exp(v - best);
                    sum += v;
                }
                const std::size_t row = static_cast<std::size_t>(rq + 32 * gq + 1024 * bq);
                for (int k = 0; k < ColorNameTable::kNames; ++k) {
                    values[row * ColorNameTable::kNames + k] = static_cast<float>(logits[k] / sum);
                }
            }
        }
    }
    return values;
}

} // namespace

ColorNameTable::ColorNameTable(std::vector<float> values) : values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(kRows) * kNames) {
        throw Error(ErrorCode::ShapeMismatch, "color-name table must hold 32768x11 entries");
    }
}

const ColorNameTable &ColorNameTable::builtin() {
    static const ColorNameTable table(build_table());
    return table;
}

ColorNameTable ColorNameTable::load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open color-name table " + path.string());
    }
    std::vector<float> values(static_cast<std::size_t>(kRows) * kNames);
    std::vector<std::uint32_t> raw(values.size());
    in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
    if (in.gcount() != static_cast<std::streamsize>(raw.size() * 4) || in.peek() != EOF) {
        throw Error(ErrorCode::ParseError, "color-name table " + path.string() + " has the wrong size");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::uint32_t v = raw[i];
        if constexpr (std::endian::native == std::endian::big) {
            v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
        }
        values[i] = std::bit_cast<float>(v);
    }
    return ColorNameTable(std::move(values));
}

void ColorNameTable::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write color-name table " + path.string());
    }
    for (float f : values_) {
        std::uint32_t v = std::bit_cast<std::uint32_t>(f);
        if constexpr (std::endian::native == std::endian::big) {
            v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
        }
        out.write(reinterpret_cast<const char *>(&v), 4);
    }
}

} // namespace occtrack
