#include "rhseg/merge_log.hpp"

#include <openssl/evp.h>

#include <memory>

#include "json.hpp"
#include "rhseg/error.hpp"

namespace rhseg {

std::string encode_merge_log(std::span<const SectionLog> logs) {
  std::string out;
  for (const SectionLog& log : logs) {
    for (const MergeRecord& m : log.merges.records) {
      nlohmann::ordered_json j;
      j["step"] = m.step;
      j["level"] = log.id.level;
      j["section"] = log.id.index();
      j["survivor"] = m.survivor;
      j["absorbed"] = m.absorbed;
      j["dissim"] = m.dissimilarity;
      j["kind"] = m.kind == MergeKind::Adjacent ? "adjacent" : "nonadjacent";
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error(ErrorKind::Io, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void seal_manifest(RunManifest& manifest, std::span<const std::uint8_t> labels_bytes,
                   std::string_view merge_log_text) {
  manifest.labels_sha256 = sha256_hex(labels_bytes);
  manifest.merge_log_sha256 = sha256_hex(merge_log_text);
  manifest.combined_sha256 = sha256_hex(manifest.labels_sha256 + "\n" + manifest.merge_log_sha256 + "\n");
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["parameters"] = parameters;
  j["execution"] = execution;
  j["outputs"]["labels"] = {{"path", labels_path}, {"sha256", labels_sha256}};
  j["outputs"]["merge_log"] = {{"path", merge_log_path}, {"sha256", merge_log_sha256}};
  j["combined_sha256"] = combined_sha256;
  j["region_count"] = region_count;
  j["converged_early"] = converged_early;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunManifest m;
    m.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
    m.execution = j.at("execution").get<std::map<std::string, std::string>>();
    m.labels_path = j.at("outputs").at("labels").at("path");
    m.labels_sha256 = j.at("outputs").at("labels").at("sha256");
    m.merge_log_path = j.at("outputs").at("merge_log").at("path");
    m.merge_log_sha256 = j.at("outputs").at("merge_log").at("sha256");
    m.combined_sha256 = j.at("combined_sha256");
    m.region_count = j.at("region_count");
    m.converged_early = j.at("converged_early");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed manifest: ") + e.what());
  }
}

}  // namespace rhseg
