#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rhseg/rhseg.hpp"

namespace rhseg {

// One JSON object per merge, sections in log order:
// {"step", "level", "section", "survivor", "absorbed", "dissim", "kind"}.
// `section` is the row-major index within the level; `step` counts within
// the section.
std::string encode_merge_log(std::span<const SectionLog> logs);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

// Parameters plus content hashes of the label map and merge log bytes.
// Equal `combined_sha256` means byte-equal outputs.
struct RunManifest {
  std::map<std::string, std::string> parameters;  // what the run computes
  std::map<std::string, std::string> execution;   // how it ran; excluded from hashes
  std::string labels_path;
  std::string labels_sha256;
  std::string merge_log_path;
  std::string merge_log_sha256;
  std::string combined_sha256;
  std::size_t region_count = 0;
  bool converged_early = false;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

// Fills the hash fields from the exact bytes written.
void seal_manifest(RunManifest& manifest, std::span<const std::uint8_t> labels_bytes,
                   std::string_view merge_log_text);

}  // namespace rhseg
