#pragma once

#include "bsg/error.hpp"
#include "bsg/matrix.hpp"

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

namespace bsg::detail {

Matrix read_matrix_body(std::istream& in, const std::string& path);
void write_matrix_body(std::ostream& out, const Matrix& m);

template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& what) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (static_cast<std::size_t>(in.gcount()) != sizeof(T)) throw Error(what + ": unexpected end of file");
    return value;
}

inline void put_string(std::ostream& out, std::string_view s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, const std::string& what) {
    const auto len = get<std::uint32_t>(in, what);
    if (len > (1u << 20)) throw Error(what + ": implausible string length");
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (static_cast<std::size_t>(in.gcount()) != len) throw Error(what + ": unexpected end of file");
    return s;
}

inline void expect_magic(std::istream& in, std::string_view magic, const std::string& what) {
    std::string buf(magic.size(), '\0');
    in.read(buf.data(), static_cast<std::streamsize>(magic.size()));
    if (buf != magic) throw Error(what + ": bad magic (not a " + std::string(magic) + " file)");
}

/// Doubles in row-major order; dimensions are written by the caller.
inline void put_doubles(std::ostream& out, const double* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

inline void get_doubles(std::istream& in, double* data, std::size_t count, const std::string& what) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) throw Error(what + ": unexpected end of file");
}

template <typename Derived>
void put_dense(std::ostream& out, const Eigen::PlainObjectBase<Derived>& m) {
    put_doubles(out, m.data(), static_cast<std::size_t>(m.size()));
}

template <typename Derived>
void get_dense(std::istream& in, Eigen::PlainObjectBase<Derived>& m, const std::string& what) {
    get_doubles(in, m.data(), static_cast<std::size_t>(m.size()), what);
}

}  // namespace bsg::detail
