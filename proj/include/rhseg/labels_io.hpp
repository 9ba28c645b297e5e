#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rhseg/region_graph.hpp"

namespace rhseg {

// Binary PGM ("P5", maxval 65535, big-endian 16-bit pixels). Throws
// TooManyLabels when a label exceeds 65535.
std::vector<std::uint8_t> encode_pgm(const LabelMap& labels);
// Accepts 8-bit (maxval < 256) and 16-bit PGM. Throws HeaderMismatch or
// ShortFile.
LabelMap decode_pgm(std::span<const std::uint8_t> bytes);

void write_labels(const LabelMap& labels, const std::filesystem::path& path);
LabelMap read_labels(const std::filesystem::path& path);

// One image row per line, comma separated.
void write_labels_csv(const LabelMap& labels, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace rhseg
