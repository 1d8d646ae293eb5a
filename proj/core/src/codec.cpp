#include "emgc/codec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "emgc/error.hpp"

namespace emgc {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

constexpr std::array<std::uint8_t, 4> kVolumeMagic{'T', 'R', 'I', 'V'};
constexpr std::array<std::uint8_t, 4> kCompressedMagic{'E', 'M', 'G', 'C'};

std::size_t record_bytes(std::uint32_t components) {
    return 4 * (4 * std::size_t{components}) + 8 + 1;
}

class Writer {
public:
    explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        for (int s = 0; s < 16; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void u32(std::uint32_t v) {
        for (int s = 0; s < 32; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::size_t remaining() const noexcept { return in_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw LengthError(std::string("truncated stream while reading ") + what);
    }
    std::uint8_t u8() {
        need(1, "u8");
        return in_[pos_++];
    }
    std::uint16_t u16() {
        need(2, "u16");
        const auto v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int k = 3; k >= 0; --k) v = (v << 8) | in_[pos_ + static_cast<std::size_t>(k)];
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }

    void magic(const std::array<std::uint8_t, 4>& expected) {
        need(4, "magic");
        if (!std::equal(expected.begin(), expected.end(), in_.begin() + static_cast<std::ptrdiff_t>(pos_)))
            throw FormatError("bad magic: expected \"" +
                              std::string(expected.begin(), expected.end()) + "\"");
        pos_ += 4;
    }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void check_version(std::uint32_t v) {
    if (v != kFormatVersion)
        throw FormatError("unsupported format version " + std::to_string(v));
}

float nudge_open_unit(float v) {
    constexpr float lo = std::numeric_limits<float>::denorm_min();
    const float hi = std::nextafter(1.0f, 0.0f);
    return std::clamp(v, lo, hi);
}

float nudge_positive(float v) {
    return std::clamp(v, std::numeric_limits<float>::denorm_min(),
                      std::numeric_limits<float>::max());
}

}  // namespace

Mixture PixelRecord::mixture() const {
    const std::size_t k = params.size() / 4;
    Mixture m(k);
    for (std::size_t c = 0; c < k; ++c) {
        m[c].h = params[c];
        m[c].mu = params[k + c];
        m[c].sigma = params[2 * k + c];
        m[c].tau = params[3 * k + c];
    }
    return m;
}

std::vector<float> pack_params(std::span<const EmgParams> mixture) {
    const std::size_t k = mixture.size();
    std::vector<float> out(4 * k);
    for (std::size_t c = 0; c < k; ++c) {
        out[c] = nudge_positive(static_cast<float>(mixture[c].h));
        out[k + c] = nudge_open_unit(static_cast<float>(mixture[c].mu));
        out[2 * k + c] = nudge_positive(static_cast<float>(mixture[c].sigma));
        out[3 * k + c] = nudge_positive(static_cast<float>(mixture[c].tau));
    }
    return out;
}

void CompressedImage::validate() const {
    const auto& h = header;
    if (h.width == 0 || h.height == 0 || h.bins == 0)
        throw LengthError("compressed image: zero dimension");
    if (h.components == 0) throw DataError("compressed image: K must be >= 1", 0);
    if (h.loss_kind != LossKind::kld && h.loss_kind != LossKind::mse)
        throw DataError("compressed image: unknown loss kind", 0);
    if (pixels.size() != std::size_t{h.width} * h.height)
        throw ShapeError("compressed image: record count does not match W*H");
    for (std::size_t p = 0; p < pixels.size(); ++p) {
        const auto& rec = pixels[p];
        if (rec.params.size() != 4 * std::size_t{h.components})
            throw ShapeError("compressed image: record " + std::to_string(p) +
                             " has the wrong parameter count");
        if (rec.remap.t_len == 0 || std::uint64_t{rec.remap.t_start} + rec.remap.t_len != h.bins)
            throw DataError("compressed image: t_start + t_len must equal T", p);
        for (const auto& c : rec.mixture())
            if (!c.valid()) throw DataError("compressed image: invalid EMG parameters", p);
    }
}

std::size_t encoded_size(std::uint32_t width, std::uint32_t height, std::uint32_t components) {
    return kCompressedHeaderBytes + std::size_t{width} * height * record_bytes(components);
}

std::size_t volume_size(std::uint32_t width, std::uint32_t height, std::uint32_t bins) {
    return kVolumeHeaderBytes + 4 * std::size_t{width} * height * bins;
}

Bytes write_volume(const TransientVolume& v) {
    v.validate();
    Writer w(volume_size(v.width, v.height, v.bins));
    w.bytes(kVolumeMagic);
    w.u32(kFormatVersion);
    w.u32(v.width);
    w.u32(v.height);
    w.u32(v.bins);
    for (float x : v.data) w.f32(x);
    return w.take();
}

TransientVolume read_volume(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.magic(kVolumeMagic);
    check_version(r.u32());
    TransientVolume v;
    v.width = r.u32();
    v.height = r.u32();
    v.bins = r.u32();
    if (v.width == 0 || v.height == 0 || v.bins == 0)
        throw LengthError("volume: zero dimension in header");
    const std::uint64_t count = std::uint64_t{v.width} * v.height * v.bins;
    if (count > r.remaining() / 4) throw LengthError("volume: payload shorter than W*H*T floats");
    if (r.remaining() != count * 4) throw LengthError("volume: trailing bytes after payload");
    v.data.resize(count);
    for (auto& x : v.data) x = r.f32();
    v.validate();
    return v;
}

Bytes encode(const CompressedImage& image) {
    image.validate();
    const auto& h = image.header;
    Writer w(encoded_size(h.width, h.height, h.components));
    w.bytes(kCompressedMagic);
    w.u32(kFormatVersion);
    w.u32(h.width);
    w.u32(h.height);
    w.u32(h.bins);
    w.u32(h.components);
    w.u32(h.window);
    w.u8(static_cast<std::uint8_t>(h.loss_kind));
    w.u8(h.flags);
    w.u16(0);
    for (const auto& rec : image.pixels) {
        w.u32(rec.remap.t_start);
        w.u32(rec.remap.t_len);
        for (float x : rec.params) w.f32(x);
        w.u8(rec.status);
    }
    return w.take();
}

CompressedImage decode(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.magic(kCompressedMagic);
    check_version(r.u32());
    CompressedImage image;
    auto& h = image.header;
    h.width = r.u32();
    h.height = r.u32();
    h.bins = r.u32();
    h.components = r.u32();
    h.window = r.u32();
    h.loss_kind = static_cast<LossKind>(r.u8());
    h.flags = r.u8();
    if (r.u16() != 0) throw FormatError("compressed image: reserved header bytes are not zero");
    if (h.width == 0 || h.height == 0 || h.bins == 0)
        throw LengthError("compressed image: zero dimension in header");
    if (h.components == 0) throw DataError("compressed image: K must be >= 1", 0);

    const std::uint64_t pixels = std::uint64_t{h.width} * h.height;
    const std::uint64_t per_record = record_bytes(h.components);
    if (pixels > r.remaining() / per_record)
        throw LengthError("compressed image: payload shorter than W*H records");
    if (r.remaining() != pixels * per_record)
        throw LengthError("compressed image: trailing bytes after payload");

    image.pixels.resize(pixels);
    for (auto& rec : image.pixels) {
        rec.remap.t_start = r.u32();
        rec.remap.t_len = r.u32();
        rec.params.resize(4 * std::size_t{h.components});
        for (auto& x : rec.params) x = r.f32();
        rec.status = r.u8();
    }
    image.validate();
    return image;
}

TransientVolume reconstruct(const CompressedImage& image) {
    image.validate();
    const auto& h = image.header;
    TransientVolume v(h.width, h.height, h.bins);
    for (std::size_t p = 0; p < image.pixels.size(); ++p) {
        const auto& rec = image.pixels[p];
        const Mixture m = rec.mixture();
        auto out = v.pixel(p);
        for (std::uint32_t b = 0; b < rec.remap.t_len; ++b)
            out[rec.remap.t_start + b] = static_cast<float>(mixture_eval(rec.remap.bin_center(b), m));
    }
    return v;
}

double compression_ratio(std::uint32_t bins, std::uint32_t components) {
    return static_cast<double>(bins) / (4.0 * components + 2.0);
}

double compression_ratio_window(std::uint32_t bins, std::uint32_t components,
                                std::uint32_t window) {
    const double n2 = static_cast<double>(window) * window;
    return n2 * bins / (n2 * 4.0 * components + 2.0);
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string() + " for reading");
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + path.string());
}

}  // namespace emgc
