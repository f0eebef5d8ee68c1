#include "ddcm/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <sstream>

#include "ddcm/error.hpp"

namespace ddcm {

namespace fs = std::filesystem;

std::string git_blob_sha1(std::string_view bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("sha1: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string git_blob_sha1_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("sha1: cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return git_blob_sha1(ss.str());
}

void write_manifest(const fs::path& path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& fields, const std::vector<fs::path>& files,
                    const std::string& config_ini) {
  std::ostringstream out;
  out << "command = " << command << '\n';
  for (const auto& [k, v] : fields) out << k << " = " << v << '\n';
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  for (const fs::path& f : files) {
    out << "file " << fs::relative(f, base).generic_string() << ' ' << git_blob_sha1_file(f) << '\n';
  }
  if (!config_ini.empty()) out << '\n' << config_ini;
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file << out.str();
  if (!file) throw DataError("manifest: cannot write '" + path.string() + "'");
}

}  // namespace ddcm
