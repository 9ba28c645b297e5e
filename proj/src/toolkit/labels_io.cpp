#include "rhseg/labels_io.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "rhseg/error.hpp"

namespace rhseg {
namespace {

class PgmReader {
 public:
  explicit PgmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space();
    std::size_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) throw Error(ErrorKind::HeaderMismatch, "PGM header number too long");
    }
    if (digits == 0) throw Error(ErrorKind::HeaderMismatch, "PGM header is malformed");
    return v;
  }
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  // Exactly one whitespace byte separates the header from the raster.
  std::span<const std::uint8_t> body() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorKind::HeaderMismatch, "PGM header is not terminated");
    }
    return bytes_.subspan(pos_ + 1);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_pgm(const LabelMap& labels) {
  if (labels.labels.size() != labels.width * labels.height) {
    throw Error(ErrorKind::DimensionMismatch, "label map size does not match its dimensions");
  }
  const std::string header =
      "P5\n" + std::to_string(labels.width) + " " + std::to_string(labels.height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + 2 * labels.labels.size());
  for (std::uint32_t l : labels.labels) {
    if (l > 65535) throw Error(ErrorKind::TooManyLabels, "label " + std::to_string(l) + " does not fit 16 bits");
    out.push_back(static_cast<std::uint8_t>(l >> 8));
    out.push_back(static_cast<std::uint8_t>(l));
  }
  return out;
}

LabelMap decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw Error(ErrorKind::HeaderMismatch, "not a binary PGM file");
  }
  PgmReader r(bytes.subspan(2));
  LabelMap out;
  out.width = r.number();
  out.height = r.number();
  const std::size_t maxval = r.number();
  if (maxval == 0 || maxval > 65535) throw Error(ErrorKind::HeaderMismatch, "PGM maxval out of range");
  const auto body = r.body();
  const std::size_t depth = maxval < 256 ? 1 : 2;
  const std::size_t pixels = out.width * out.height;
  if (body.size() < pixels * depth) throw Error(ErrorKind::ShortFile, "PGM raster is shorter than its header");
  out.labels.resize(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    out.labels[p] = depth == 1 ? body[p] : (std::uint32_t{body[2 * p]} << 8 | body[2 * p + 1]);
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

void write_labels(const LabelMap& labels, const std::filesystem::path& path) {
  write_file(path, encode_pgm(labels));
}

LabelMap read_labels(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

void write_labels_csv(const LabelMap& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  for (std::size_t r = 0; r < labels.height; ++r) {
    for (std::size_t c = 0; c < labels.width; ++c) {
      if (c) out << ',';
      out << labels.at(r, c);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

}  // namespace rhseg
