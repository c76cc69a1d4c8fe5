#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sage::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

namespace detail {

// Decodes one scalar value starting at bytes[i]. Returns the value and its
// byte length, or nullopt for an ill-formed sequence (overlong, surrogate,
// out of range, truncated).
inline std::optional<std::pair<char32_t, std::size_t>> decode_one(std::string_view bytes,
                                                                   std::size_t i) noexcept {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    if (b0 < 0x80) return std::pair{static_cast<char32_t>(b0), std::size_t{1}};

    std::size_t len;
    char32_t cp;
    char32_t min;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4, cp = b0 & 0x07, min = 0x10000;
    } else {
        return std::nullopt;
    }
    if (i + len > bytes.size()) return std::nullopt;
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(bytes[i + k]);
        if ((b & 0xC0) != 0x80) return std::nullopt;
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return std::nullopt;
    return std::pair{cp, len};
}

}  // namespace detail

inline bool is_valid(std::string_view bytes) noexcept {
    for (std::size_t i = 0; i < bytes.size();) {
        auto r = detail::decode_one(bytes, i);
        if (!r) return false;
        i += r->second;
    }
    return true;
}

constexpr std::size_t encoded_size(char32_t cp) noexcept {
    return cp < 0x80 ? 1 : cp < 0x800 ? 2 : cp < 0x10000 ? 3 : 4;
}

inline void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

/// Code points of `bytes`; ill-formed bytes decode as U+FFFD one at a time.
inline std::u32string decode(std::string_view bytes) {
    std::u32string out;
    out.reserve(bytes.size());
    for (std::size_t i = 0; i < bytes.size();) {
        if (auto r = detail::decode_one(bytes, i)) {
            out.push_back(r->first);
            i += r->second;
        } else {
            out.push_back(kReplacement);
            ++i;
        }
    }
    return out;
}

inline std::string encode(std::u32string_view cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append(out, cp);
    return out;
}

/// Replaces ill-formed bytes with U+FFFD; valid input is returned unchanged.
inline std::string sanitize(std::string_view bytes) {
    if (is_valid(bytes)) return std::string(bytes);
    return encode(decode(bytes));
}

/// Drops ill-formed bytes, such as halves of a character split by a token cut.
inline std::string strip_invalid(std::string_view bytes) {
    if (is_valid(bytes)) return std::string(bytes);
    std::string out;
    out.reserve(bytes.size());
    for (std::size_t i = 0; i < bytes.size();) {
        if (auto r = detail::decode_one(bytes, i)) {
            out.append(bytes.substr(i, r->second));
            i += r->second;
        } else {
            ++i;
        }
    }
    return out;
}

inline std::size_t length(std::string_view bytes) { return decode(bytes).size(); }

}  // namespace sage::utf8
