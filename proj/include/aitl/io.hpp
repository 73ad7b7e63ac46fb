#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace aitl {

/// Writes through a sibling temp file and renames it into place.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view data);
std::string ReadFile(const std::filesystem::path& path);

std::uint32_t Crc32(std::string_view data);

}  // namespace aitl
