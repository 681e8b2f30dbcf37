#pragma once

// Little-endian binary encoding helpers with byte-offset tracking for diagnostics.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <utility>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "fanfilter/error.hpp"

namespace fanfilter::binary {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

inline std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'", 0);
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for '" + path + "'");
}

class Writer {
public:
    template <class T>
    void put(T v) {
        v = to_little(v);
        const auto* p = reinterpret_cast<const unsigned char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    const std::vector<unsigned char>& bytes() const { return buf_; }

    void save(const std::string& path) const { write_file(path, buf_); }

private:
    std::vector<unsigned char> buf_;
};

class Reader {
public:
    explicit Reader(std::vector<unsigned char> data) : data_(std::move(data)) {}

    static Reader from_file(const std::string& path) { return Reader(read_file(path)); }

    template <class T>
    T get(const char* what) {
        if (remaining() < sizeof(T)) throw FormatError(std::string("truncated file while reading ") + what, pos_);
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little(v);
    }

    void expect_bytes(std::string_view magic, const char* what) {
        if (remaining() < magic.size() || std::memcmp(data_.data() + pos_, magic.data(), magic.size()) != 0)
            throw FormatError(std::string("bad magic for ") + what, pos_);
        pos_ += magic.size();
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t size() const { return data_.size(); }

private:
    std::vector<unsigned char> data_;
    std::size_t pos_ = 0;
};

}  // namespace fanfilter::binary
