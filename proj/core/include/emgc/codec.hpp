#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "emgc/emg.hpp"
#include "emgc/losses.hpp"
#include "emgc/signal.hpp"
#include "emgc/volume.hpp"

namespace emgc {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kVolumeHeaderBytes = 20;
inline constexpr std::size_t kCompressedHeaderBytes = 32;

/// Header bit marking a ground-truth sidecar written by the scene generator.
inline constexpr std::uint8_t kFlagGroundTruth = 0x01;

/// Per-pixel status bits.
inline constexpr std::uint8_t kPixelConverged = 0x01;
inline constexpr std::uint8_t kPixelDegenerate = 0x02;
inline constexpr std::uint8_t kPixelNumericWarning = 0x04;

struct CompressedHeader {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t bins = 0;
    std::uint32_t components = 0;
    std::uint32_t window = 1;
    LossKind loss_kind = LossKind::kld;
    std::uint8_t flags = 0;

    friend bool operator==(const CompressedHeader&, const CompressedHeader&) = default;
};

/// One pixel: its time remap, 4K constrained parameters laid out as
/// h_1..h_K, mu_1..mu_K, sigma_1..sigma_K, tau_1..tau_K, and a status byte.
struct PixelRecord {
    TimeRemap remap;
    std::vector<float> params;
    std::uint8_t status = 0;

    Mixture mixture() const;
    friend bool operator==(const PixelRecord&, const PixelRecord&) = default;
};

struct CompressedImage {
    CompressedHeader header;
    std::vector<PixelRecord> pixels;  // row-major (i * height + j)

    /// Throws ShapeError on record-count or parameter-count mismatch, DataError on
    /// parameters outside their domains or remaps inconsistent with T.
    void validate() const;
    friend bool operator==(const CompressedImage&, const CompressedImage&) = default;
};

/// Packs a mixture into the h.. mu.. sigma.. tau.. float layout, nudging values that
/// round out of their open domains in float32 back inside.
std::vector<float> pack_params(std::span<const EmgParams> mixture);

Bytes write_volume(const TransientVolume& v);
TransientVolume read_volume(std::span<const std::uint8_t> bytes);

Bytes encode(const CompressedImage& image);
CompressedImage decode(std::span<const std::uint8_t> bytes);

/// Evaluates every pixel's mixture on its normalized bin centers and undoes the clipping.
TransientVolume reconstruct(const CompressedImage& image);

/// Bytes of an encoded stream: header plus W*H records of 4*(4K) + 8 + 1 bytes.
std::size_t encoded_size(std::uint32_t width, std::uint32_t height, std::uint32_t components);
std::size_t volume_size(std::uint32_t width, std::uint32_t height, std::uint32_t bins);

/// T / (4K + 2): histogram values replaced by one pixel's stored values.
double compression_ratio(std::uint32_t bins, std::uint32_t components);
/// (N^2 T) / (N^2 4K + 2) for an N x N window sharing one remap.
double compression_ratio_window(std::uint32_t bins, std::uint32_t components, std::uint32_t window);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace emgc
