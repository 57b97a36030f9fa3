#pragma once

#include "animgan/training.hpp"

#include <filesystem>
#include <string>

namespace animgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Header {magic "AGCK", version, payload size, CRC-32 of payload} followed by a
/// portable binary payload.
std::string serialize_checkpoint(const TrainState& state);
TrainState deserialize_checkpoint(const std::string& bytes);

/// Written to a temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace animgan
