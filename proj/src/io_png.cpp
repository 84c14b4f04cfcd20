#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "json.hpp"

#include "panq/io.hpp"

namespace panq::io {

namespace {

void quiet_warning(png_structp, png_const_charp) {}
void quiet_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }

struct File {
    std::FILE* fp = nullptr;
    explicit File(const std::filesystem::path& path, const char* mode)
        : fp(std::fopen(path.string().c_str(), mode)) {}
    ~File() {
        if (fp) std::fclose(fp);
    }
    File(const File&) = delete;
    File& operator=(const File&) = delete;
};

struct Reader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    Reader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, quiet_error, quiet_warning);
        if (png) info = png_create_info_struct(png);
    }
    ~Reader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct Writer {
    png_structp png = nullptr;
    png_infop info = nullptr;
    Writer() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, quiet_error, quiet_warning);
        if (png) info = png_create_info_struct(png);
    }
    ~Writer() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

struct DecodedPng {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int color_type = 0;
    int channels = 0;
    std::vector<std::vector<png_byte>> rows;
};

DecodedPng decode_png(const std::filesystem::path& path) {
    File file(path, "rb");
    if (!file.fp) throw DecodeError("cannot open '" + path.string() + "' for reading");
    Reader reader;
    if (!reader.png || !reader.info) throw DecodeError("libpng initialization failed");
    if (setjmp(png_jmpbuf(reader.png)))
        throw DecodeError("failed to decode '" + path.string() + "' (corrupt or truncated PNG)");

    png_init_io(reader.png, file.fp);
    png_read_info(reader.png, reader.info);

    DecodedPng out;
    out.width = static_cast<int>(png_get_image_width(reader.png, reader.info));
    out.height = static_cast<int>(png_get_image_height(reader.png, reader.info));
    out.color_type = png_get_color_type(reader.png, reader.info);
    out.bit_depth = png_get_bit_depth(reader.png, reader.info);

    if (out.color_type == PNG_COLOR_TYPE_GRAY && out.bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(reader.png);
        out.bit_depth = 8;
    }
    png_set_interlace_handling(reader.png);
    png_read_update_info(reader.png, reader.info);
    out.channels = png_get_channels(reader.png, reader.info);

    const std::size_t row_bytes = png_get_rowbytes(reader.png, reader.info);
    out.rows.assign(static_cast<std::size_t>(out.height), std::vector<png_byte>(row_bytes));
    std::vector<png_bytep> row_ptrs(out.rows.size());
    for (std::size_t y = 0; y < out.rows.size(); ++y) row_ptrs[y] = out.rows[y].data();
    png_read_image(reader.png, row_ptrs.data());
    png_read_end(reader.png, nullptr);
    return out;
}

void encode_png(const std::filesystem::path& path, int width, int height, int bit_depth,
                int color_type, const std::vector<std::vector<png_byte>>& rows) {
    File file(path, "wb");
    if (!file.fp) throw WriteError("cannot open '" + path.string() + "' for writing");
    Writer writer;
    if (!writer.png || !writer.info) throw WriteError("libpng initialization failed");
    if (setjmp(png_jmpbuf(writer.png)))
        throw WriteError("failed to encode '" + path.string() + "'");

    png_init_io(writer.png, file.fp);
    png_set_IHDR(writer.png, writer.info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(writer.png, writer.info);
    for (const std::vector<png_byte>& row : rows)
        png_write_row(writer.png, const_cast<png_bytep>(row.data()));
    png_write_end(writer.png, nullptr);
}

}  // namespace

GrayImage read_gray(const std::filesystem::path& path) {
    const DecodedPng png = decode_png(path);
    if (png.color_type != PNG_COLOR_TYPE_GRAY || png.channels != 1)
        throw UnsupportedFormat("'" + path.string() +
                                "' is not single-channel grayscale (color type " +
                                std::to_string(png.color_type) + ")");
    GrayImage img(png.width, png.height, png.bit_depth);
    for (int y = 0; y < png.height; ++y) {
        const std::vector<png_byte>& row = png.rows[static_cast<std::size_t>(y)];
        for (int x = 0; x < png.width; ++x) {
            if (png.bit_depth == 16)
                img.at(x, y) = static_cast<double>((row[2 * x] << 8) | row[2 * x + 1]);
            else
                img.at(x, y) = static_cast<double>(row[x]);
        }
    }
    return img;
}

void write_gray(const GrayImage& img, const std::filesystem::path& path) {
    const double max_value = img.bitdepth == 16 ? 65535.0 : 255.0;
    std::vector<std::vector<png_byte>> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        std::vector<png_byte>& row = rows[static_cast<std::size_t>(y)];
        row.resize(static_cast<std::size_t>(img.width) * (img.bitdepth == 16 ? 2 : 1));
        for (int x = 0; x < img.width; ++x) {
            const double clamped = std::clamp(std::round(img.at(x, y)), 0.0, max_value);
            const auto v = static_cast<std::uint16_t>(clamped);
            if (img.bitdepth == 16) {
                row[2 * x] = static_cast<png_byte>(v >> 8);
                row[2 * x + 1] = static_cast<png_byte>(v & 0xff);
            } else {
                row[x] = static_cast<png_byte>(v);
            }
        }
    }
    encode_png(path, img.width, img.height, img.bitdepth, PNG_COLOR_TYPE_GRAY, rows);
}

void write_panoptic(const PanopticMap& map, const std::filesystem::path& png_path,
                    const std::filesystem::path& json_path, const std::string& image_id) {
    for (const Segment& s : map.segments)
        if (s.id >= (1u << 24))
            throw IdOverflow("segment id " + std::to_string(s.id) + " does not fit 24 bits");

    std::vector<std::vector<png_byte>> rows(static_cast<std::size_t>(map.height));
    for (int y = 0; y < map.height; ++y) {
        std::vector<png_byte>& row = rows[static_cast<std::size_t>(y)];
        row.resize(static_cast<std::size_t>(map.width) * 3);
        for (int x = 0; x < map.width; ++x) {
            const std::uint32_t id = map.id_at(x, y);
            row[3 * x + 0] = static_cast<png_byte>(id & 0xff);
            row[3 * x + 1] = static_cast<png_byte>((id >> 8) & 0xff);
            row[3 * x + 2] = static_cast<png_byte>((id >> 16) & 0xff);
        }
    }
    encode_png(png_path, map.width, map.height, 8, PNG_COLOR_TYPE_RGB, rows);

    nlohmann::ordered_json doc;
    if (!image_id.empty()) doc["image_id"] = image_id;
    doc["width"] = map.width;
    doc["height"] = map.height;
    std::vector<Segment> ordered = map.segments;
    std::sort(ordered.begin(), ordered.end(),
              [](const Segment& a, const Segment& b) { return a.id < b.id; });
    doc["segments"] = nlohmann::ordered_json::array();
    for (const Segment& s : ordered) {
        nlohmann::ordered_json seg;
        seg["id"] = s.id;
        seg["category_id"] = s.category_id;
        seg["area"] = s.area;
        if (s.confidence) seg["confidence"] = *s.confidence;
        doc["segments"].push_back(std::move(seg));
    }
    std::FILE* fp = std::fopen(json_path.string().c_str(), "wb");
    if (!fp) throw WriteError("cannot open '" + json_path.string() + "' for writing");
    const std::string text = doc.dump(2) + "\n";
    const bool ok = std::fwrite(text.data(), 1, text.size(), fp) == text.size();
    std::fclose(fp);
    if (!ok) throw WriteError("short write to '" + json_path.string() + "'");
}

PanopticMap read_panoptic(const std::filesystem::path& png_path,
                          const std::filesystem::path& json_path) {
    const DecodedPng png = decode_png(png_path);
    if (png.color_type != PNG_COLOR_TYPE_RGB || png.channels != 3 || png.bit_depth != 8)
        throw UnsupportedFormat("'" + png_path.string() + "' is not an 8-bit RGB id map");

    PanopticMap map(png.width, png.height);
    for (int y = 0; y < png.height; ++y) {
        const std::vector<png_byte>& row = png.rows[static_cast<std::size_t>(y)];
        for (int x = 0; x < png.width; ++x) {
            const std::uint32_t r = row[3 * x + 0];
            const std::uint32_t g = row[3 * x + 1];
            const std::uint32_t b = row[3 * x + 2];
            map.id_map[static_cast<std::size_t>(y) * png.width + x] = r + 256 * g + 65536 * b;
        }
    }

    nlohmann::json doc;
    {
        std::ifstream in(json_path);
        if (!in) throw DecodeError("cannot open '" + json_path.string() + "' for reading");
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw DecodeError("bad JSON in '" + json_path.string() + "': " + e.what());
        }
    }
    if (doc.contains("width") && (doc["width"] != map.width || doc["height"] != map.height))
        throw SidecarMismatch("sidecar dimensions disagree with '" + png_path.string() + "'");

    std::unordered_map<std::uint32_t, std::int64_t> pixel_counts;
    for (std::uint32_t id : map.id_map)
        if (id != 0) ++pixel_counts[id];

    for (const nlohmann::json& seg : doc.at("segments")) {
        Segment s;
        s.id = seg.at("id").get<std::uint32_t>();
        s.category_id = seg.at("category_id").get<int>();
        s.area = seg.at("area").get<std::int64_t>();
        if (seg.contains("confidence")) s.confidence = seg["confidence"].get<double>();
        auto it = pixel_counts.find(s.id);
        if (it == pixel_counts.end())
            throw SidecarMismatch("sidecar lists segment " + std::to_string(s.id) +
                                  " absent from the id map");
        if (it->second != s.area)
            throw SidecarMismatch("segment " + std::to_string(s.id) + " area " +
                                  std::to_string(s.area) + " != pixel count " +
                                  std::to_string(it->second));
        pixel_counts.erase(it);
        map.segments.push_back(std::move(s));
    }
    if (!pixel_counts.empty())
        throw SidecarMismatch("id " + std::to_string(pixel_counts.begin()->first) +
                              " appears in the id map but not in the sidecar");
    return map;
}

}  // namespace panq::io
