#pragma once

#include <occtrack/imaging.hpp>

#include <array>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace occtrack {

/// Quantized-RGB to color-name probability table.
///
/// Layout (also the on-disk asset format): 32*32*32 rows of 11 little-endian
/// float32 probabilities, row index = r/8 + 32*(g/8) + 1024*(b/8). Columns
/// follow kColorNames.
class ColorNameTable {
public:
    static constexpr int kNames = 11;
    static constexpr int kRows = 32 * 32 * 32;
    static constexpr std::array<std::string_view, kNames> kColorNames = {
        "black", "blue", "brown", "grey", "green", "orange", "pink", "purple", "red", "white", "yellow"};

    /// Built-in table, computed once on first use.
    static const ColorNameTable &builtin();
    static ColorNameTable load(const std::filesystem::path &path);
    void save(const std::filesystem::path &path) const;

    static constexpr int index(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        return r / 8 + 32 * (g / 8) + 1024 * (b / 8);
    }
    std::span<const float, kNames> lookup(std::uint8_t r, std::uint8_t g, std::uint8_t b) const {
        return std::span<const float, kNames>(values_.data() + static_cast<std::size_t>(index(r, g, b)) * kNames,
                                              kNames);
    }

    explicit ColorNameTable(std::vector<float> values);

private:
    std::vector<float> values_;
};

} // namespace occtrack
