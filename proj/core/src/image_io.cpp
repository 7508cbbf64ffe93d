#include "evtrack/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "evtrack/atomic_file.hpp"
#include "evtrack/error.hpp"

namespace evtrack {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const std::string& source) {
    std::string token;
    char c = 0;
    while (in.get(c)) {
        if (c == '#') {
            std::string ignored;
            std::getline(in, ignored);
            if (!token.empty()) break;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(c);
    }
    if (token.empty()) throw ParseError(source + ": truncated PGM header");
    return token;
}

int header_int(std::istream& in, const std::string& source, const char* what) {
    const std::string token = header_token(in, source);
    try {
        std::size_t used = 0;
        const int v = std::stoi(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw ParseError(source + ": invalid PGM " + what + " '" + token + "'");
    }
}

}  // namespace

Frame read_pgm(std::istream& in, const std::string& source_name) {
    const std::string magic = header_token(in, source_name);
    if (magic != "P5" && magic != "P2") throw ParseError(source_name + ": not a PGM file (magic '" + magic + "')");
    const int width = header_int(in, source_name, "width");
    const int height = header_int(in, source_name, "height");
    const int maxval = header_int(in, source_name, "maxval");
    if (width < 1 || height < 1) throw ParseError(source_name + ": PGM dimensions must be positive");
    if (maxval < 1 || maxval > 255) throw ParseError(source_name + ": only 8-bit PGM files are supported");

    Frame frame(height, width);
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (magic == "P5") {
        std::vector<unsigned char> raw(n);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) throw ParseError(source_name + ": truncated PGM pixel data");
        for (std::size_t i = 0; i < n; ++i) frame.storage()[i] = static_cast<float>(raw[i]) / static_cast<float>(maxval);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            int v = 0;
            if (!(in >> v) || v < 0 || v > maxval) {
                throw ParseError(source_name + ": bad ASCII PGM sample " + std::to_string(i));
            }
            frame.storage()[i] = static_cast<float>(v) / static_cast<float>(maxval);
        }
    }
    return frame;
}

Frame load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    return read_pgm(in, path.string());
}

void write_pgm(std::ostream& out, const Frame& frame) {
    out << "P5\n" << frame.width() << ' ' << frame.height() << "\n255\n";
    std::vector<unsigned char> raw(frame.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(frame.storage()[i], 0.0f, 1.0f);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void save_pgm(const std::filesystem::path& path, const Frame& frame) {
    write_file_atomic(path, [&](std::ostream& out) { write_pgm(out, frame); });
}

}  // namespace evtrack
