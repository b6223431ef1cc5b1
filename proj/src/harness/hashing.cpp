#include "dcpose/harness/hashing.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <memory>
#include <vector>

#include "dcpose/errors.hpp"

#ifndef DCPOSE_REVISION
#define DCPOSE_REVISION "unknown"
#endif

namespace dcpose {
namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("sha256: update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw Error("sha256: final failed");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string read_all(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_all(path)); }

std::string hash_tree(const std::filesystem::path& root, const std::vector<std::string>& ignore) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    if (std::find(ignore.begin(), ignore.end(), e.path().filename().string()) != ignore.end()) continue;
    files.push_back(std::filesystem::relative(e.path(), root));
  }
  std::sort(files.begin(), files.end());
  Sha256 h;
  for (const auto& rel : files) {
    const std::string name = rel.generic_string();
    const std::string body = read_all(root / rel);
    const std::uint64_t sizes[2] = {name.size(), body.size()};
    h.update(sizes, sizeof(sizes));
    h.update(name.data(), name.size());
    h.update(body.data(), body.size());
  }
  return h.hex();
}

std::string build_revision() { return DCPOSE_REVISION; }

}  // namespace dcpose
