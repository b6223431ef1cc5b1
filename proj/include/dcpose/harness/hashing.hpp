#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dcpose {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Hash over every regular file below `root` (relative path and contents, sorted by path).
/// Files whose name is in `ignore` are skipped.
std::string hash_tree(const std::filesystem::path& root, const std::vector<std::string>& ignore = {});

/// Revision string baked in at build time.
std::string build_revision();

}  // namespace dcpose
