#pragma once

// On-disk index layout (all integers little-endian):
//
//   magic        8 bytes  "QEXPIDX\0"
//   version      u32      currently 1
//   body_size    u64      number of body bytes that follow
//   body         varint-encoded, see below
//   crc32        u32      zlib CRC-32 of the body
//
// body:
//   stemmer (0 none, 1 porter)    varint
//   lowercase                     varint
//   num_stopwords x { len varint, bytes }, preceded by num_stopwords varint
//   num_docs                      varint
//   num_docs x { id_len varint, id bytes, doc_len varint }
//   num_terms                     varint
//   num_terms x { term_len varint, term bytes, df varint, cf varint,
//                 df x { doc_gap varint, tf varint } }
//
// doc_gap is the first doc ordinal for the first posting and the difference to
// the previous ordinal afterwards.

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "qexp/error.hpp"
#include "qexp/index.hpp"

namespace qexp {

inline constexpr std::array<char, 8> index_magic{'Q', 'E', 'X', 'P', 'I', 'D', 'X', '\0'};
inline constexpr std::uint32_t index_format_version = 1;

namespace detail {

class ByteWriter {
  public:
    void varint(std::uint64_t v) {
        while (v >= 0x80) {
            bytes_.push_back(static_cast<char>((v & 0x7F) | 0x80));
            v >>= 7;
        }
        bytes_.push_back(static_cast<char>(v));
    }
    void string(std::string_view s) {
        varint(s.size());
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    template <typename T>
    void fixed(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }
    void raw(std::span<const char> s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    [[nodiscard]] const std::vector<char>& bytes() const { return bytes_; }

  private:
    std::vector<char> bytes_;
};

class ByteReader {
  public:
    explicit ByteReader(std::span<const char> bytes) : bytes_(bytes) {}

    std::uint64_t varint() {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            auto b = static_cast<unsigned char>(next());
            v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
            if ((b & 0x80) == 0) {
                return v;
            }
        }
        throw IndexFormatError("varint overflow in index body");
    }
    std::string string() {
        auto len = varint();
        if (len > bytes_.size() - pos_) {
            throw IndexFormatError("string runs past end of index body");
        }
        std::string s(bytes_.data() + pos_, len);
        pos_ += len;
        return s;
    }
    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

  private:
    char next() {
        if (pos_ >= bytes_.size()) {
            throw IndexFormatError("index body ends mid-record");
        }
        return bytes_[pos_++];
    }

    std::span<const char> bytes_;
    std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::span<const char> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks for very large bodies.
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1U << 30));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), n);
        pos += n;
    }
    return static_cast<std::uint32_t>(crc);
}

template <typename T>
T read_fixed(std::span<const char> bytes) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<T>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    }
    return v;
}

}  // namespace detail

inline std::vector<char> serialize_index(const CorpusIndex& index) {
    detail::ByteWriter body;
    const auto& analyzer = index.analyzer();
    body.varint(analyzer.stemmer == Stemmer::porter ? 1 : 0);
    body.varint(analyzer.lowercase ? 1 : 0);
    body.varint(analyzer.stopwords.size());
    for (const auto& w : analyzer.stopwords) {
        body.string(w);
    }
    body.varint(index.num_docs());
    for (DocOrdinal d = 0; d < index.num_docs(); ++d) {
        body.string(index.doc_id(d));
        body.varint(index.doc_len(d));
    }
    body.varint(index.vocabulary_size());
    for (const auto& rec : index.terms()) {
        body.string(rec.term);
        body.varint(rec.df);
        body.varint(rec.cf);
        DocOrdinal prev = 0;
        for (const auto& p : rec.postings) {
            body.varint(p.doc - prev);
            body.varint(p.tf);
            prev = p.doc;
        }
    }

    detail::ByteWriter file;
    file.raw(index_magic);
    file.fixed<std::uint32_t>(index_format_version);
    file.fixed<std::uint64_t>(body.bytes().size());
    file.raw(body.bytes());
    file.fixed<std::uint32_t>(detail::crc32_of(body.bytes()));
    return file.bytes();
}

inline CorpusIndex deserialize_index(std::span<const char> bytes) {
    constexpr std::size_t header = 8 + 4 + 8;
    if (bytes.size() < index_magic.size() ||
        std::memcmp(bytes.data(), index_magic.data(), index_magic.size()) != 0) {
        throw IndexFormatError("not an index file (bad magic bytes)");
    }
    if (bytes.size() < header) {
        throw IndexTruncatedError("index file truncated inside header");
    }
    auto version = detail::read_fixed<std::uint32_t>(bytes.subspan(8));
    if (version != index_format_version) {
        throw IndexVersionError("unsupported index version " + std::to_string(version) + " (expected " +
                                std::to_string(index_format_version) + ")");
    }
    auto body_size = detail::read_fixed<std::uint64_t>(bytes.subspan(12));
    if (bytes.size() - header < body_size || bytes.size() - header - body_size < 4) {
        throw IndexTruncatedError("index file truncated: expected " + std::to_string(body_size + header + 4) +
                                  " bytes, found " + std::to_string(bytes.size()));
    }
    if (bytes.size() - header - body_size > 4) {
        throw IndexFormatError("trailing bytes after index checksum");
    }
    auto body = bytes.subspan(header, body_size);
    auto stored = detail::read_fixed<std::uint32_t>(bytes.subspan(header + body_size));
    if (stored != detail::crc32_of(body)) {
        throw IndexChecksumError("index checksum mismatch");
    }

    detail::ByteReader in(body);
    AnalyzerConfig analyzer;
    analyzer.stemmer = in.varint() == 1 ? Stemmer::porter : Stemmer::none;
    analyzer.lowercase = in.varint() != 0;
    analyzer.stopwords.clear();
    auto num_stop = in.varint();
    for (std::uint64_t i = 0; i < num_stop; ++i) {
        analyzer.stopwords.insert(in.string());
    }
    auto num_docs = in.varint();
    std::vector<std::string> ids;
    std::vector<std::uint32_t> lens;
    ids.reserve(num_docs);
    lens.reserve(num_docs);
    for (std::uint64_t d = 0; d < num_docs; ++d) {
        ids.push_back(in.string());
        lens.push_back(static_cast<std::uint32_t>(in.varint()));
    }
    auto num_terms = in.varint();
    std::vector<TermRecord> terms;
    terms.reserve(num_terms);
    for (std::uint64_t t = 0; t < num_terms; ++t) {
        TermRecord rec;
        rec.term = in.string();
        rec.df = static_cast<std::uint32_t>(in.varint());
        rec.cf = in.varint();
        rec.postings.reserve(rec.df);
        DocOrdinal doc = 0;
        for (std::uint32_t i = 0; i < rec.df; ++i) {
            doc += static_cast<DocOrdinal>(in.varint());
            rec.postings.push_back({doc, static_cast<std::uint32_t>(in.varint())});
        }
        terms.push_back(std::move(rec));
    }
    if (!in.done()) {
        throw IndexFormatError("unconsumed bytes in index body");
    }
    try {
        return CorpusIndex(std::move(ids), std::move(lens), std::move(terms), std::move(analyzer));
    } catch (const BuildError& e) {
        throw IndexFormatError(std::string("inconsistent index contents: ") + e.what());
    }
}

/// Writes the index to `path` via a temporary file and rename.
inline void save_index(const CorpusIndex& index, const std::filesystem::path& path) {
    auto bytes = serialize_index(index);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write index file: " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw Error("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline CorpusIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open index file: " + path.string());
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_index(bytes);
}

}  // namespace qexp
