#include "hrcloud/image.hpp"

#include <cmath>
#include <fstream>

namespace hrcloud {

namespace {

// Reads the next token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) continue;
        tok.push_back(static_cast<char>(ch));
        while ((ch = in.peek()) != EOF && !std::isspace(ch) && ch != '#')
            tok.push_back(static_cast<char>(in.get()));
        return tok;
    }
    return tok;
}

int parse_int(std::istream& in, const std::string& path, const char* what) {
    std::string tok = next_token(in);
    if (tok.empty()) throw DataError(path + ": truncated header, missing " + what);
    try {
        return std::stoi(tok);
    } catch (...) {
        throw DataError(path + ": bad " + std::string(what) + " '" + tok + "'");
    }
}

}  // namespace

float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image file: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || (m1 != '2' && m1 != '3' && m1 != '5' && m1 != '6'))
        throw DataError(path + ": not a supported PGM/PPM file (magic '" + std::string{m0, m1} + "')");
    const bool color = (m1 == '3' || m1 == '6');
    const bool binary = (m1 == '5' || m1 == '6');
    const int channels = color ? 3 : 1;

    int w = parse_int(in, path, "width");
    int h = parse_int(in, path, "height");
    int maxval = parse_int(in, path, "maxval");
    if (w <= 0 || h <= 0) throw DataError(path + ": non-positive image dimensions");
    if (maxval <= 0 || maxval > 255)
        throw DataError(path + ": unsupported maxval " + std::to_string(maxval) + " (must be 1..255)");

    Image img(h, w, channels);
    const int64_t count = int64_t(h) * w * channels;
    const float scale = 1.0f / static_cast<float>(maxval);
    if (binary) {
        in.get();  // single whitespace after maxval
        std::vector<uint8_t> raw(static_cast<size_t>(count));
        in.read(reinterpret_cast<char*>(raw.data()), count);
        if (in.gcount() != count) throw DataError(path + ": truncated pixel data");
        for (int64_t i = 0; i < count; ++i) img.data[static_cast<size_t>(i)] = raw[static_cast<size_t>(i)] * scale;
    } else {
        for (int64_t i = 0; i < count; ++i) {
            int v = parse_int(in, path, "pixel value");
            if (v < 0 || v > maxval) throw DataError(path + ": pixel value out of range");
            img.data[static_cast<size_t>(i)] = v * scale;
        }
    }
    return img;
}

namespace {
void write_pnm(const std::string& path, const Image& img, const char* magic) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image file: " + path);
    out << magic << "\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> raw(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        float v = img.data[i];
        if (v < 0.0f) v = 0.0f;
        if (v > 1.0f) v = 1.0f;
        raw[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError("short write to image file: " + path);
}
}  // namespace

void write_pgm(const std::string& path, const Image& gray) {
    if (gray.channels != 1) throw ShapeError("write_pgm: image must have 1 channel");
    write_pnm(path, gray, "P5");
}

void write_ppm(const std::string& path, const Image& color) {
    if (color.channels != 3) throw ShapeError("write_ppm: image must have 3 channels");
    write_pnm(path, color, "P6");
}

Image load_image(const std::string& path) { return read_pnm(path); }

Image load_mask(const std::string& path) {
    Image img = read_pnm(path);
    Image gray = img.channels == 1 ? std::move(img) : to_grayscale(img);
    for (auto& v : gray.data) v = v >= 0.5f ? 1.0f : 0.0f;
    return gray;
}

void save_probability_map(const std::string& path, const Image& prob) {
    if (prob.channels != 1) throw ShapeError("save_probability_map: expected 1 channel");
    write_pgm(path, prob);
}

Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) throw ShapeError("to_grayscale: expected 1 or 3 channels");
    Image out(img.height, img.width, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(y, x) = luma(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
    return out;
}

}  // namespace hrcloud
