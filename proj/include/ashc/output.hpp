// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

// Run artifacts: CSV tables with 17 significant digits, SHA-256 content
// digests and a JSON manifest. Every file is written to a temporary name in
// the target directory and renamed into place once complete.

#pragma once

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ashc/errors.hpp"
#include "json.hpp"

namespace ashc {

/// Shortest round-trip-safe text for a double: general format, 17 significant
/// digits, '.' decimal point regardless of locale.
inline std::string format_double(double v) {
    std::array<char, 40> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    if (ec != std::errc()) throw ArgumentError("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

/// Incremental SHA-256.
class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw Error("Sha256: digest initialisation failed");
    }

    void update(std::string_view data) {
        if (EVP_DigestUpdate(ctx_.get(), data.data(), data.size()) != 1) throw Error("Sha256: update failed");
    }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error("Sha256: finalisation failed");
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        out.reserve(2 * len);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(digits[md[i] >> 4]);
            out.push_back(digits[md[i] & 0xF]);
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data);
    return h.hex();
}

struct FileRecord {
    std::string name;  ///< relative to the output directory
    std::string sha256;
    std::uint64_t bytes = 0;
};

/// Streams text into "<path>.tmp" and renames it onto path on commit().
/// An uncommitted writer removes its temporary file.
class AtomicFileWriter {
public:
    explicit AtomicFileWriter(std::filesystem::path path)
        : path_(std::move(path)), tmp_(path_.string() + ".tmp") {
        out_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!out_) throw Error("cannot open '" + tmp_.string() + "' for writing");
    }

    AtomicFileWriter(const AtomicFileWriter&) = delete;
    AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

    ~AtomicFileWriter() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

    void write(std::string_view s) {
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
        hash_.update(s);
        bytes_ += s.size();
    }

    FileRecord commit() {
        out_.flush();
        out_.close();
        if (!out_) throw Error("write to '" + tmp_.string() + "' failed");
        std::filesystem::rename(tmp_, path_);
        committed_ = true;
        return {path_.filename().string(), hash_.hex(), bytes_};
    }

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_;
    std::ofstream out_;
    Sha256 hash_;
    std::uint64_t bytes_ = 0;
    bool committed_ = false;
};

inline FileRecord write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    AtomicFileWriter w(path);
    w.write(content);
    return w.commit();
}

/// Numeric CSV with a mandatory header row.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
        : file_(path), columns_(header.size()) {
        if (header.empty()) throw ArgumentError("CsvWriter: empty header");
        std::string line;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) line.push_back(',');
            line += header[i];
        }
        line.push_back('\n');
        file_.write(line);
    }

    void row(const std::vector<double>& values) {
        if (values.size() != columns_) throw ArgumentError("CsvWriter: row width does not match the header");
        line_.clear();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) line_.push_back(',');
            line_ += format_double(values[i]);
        }
        line_.push_back('\n');
        file_.write(line_);
        ++rows_;
    }

    std::size_t rows() const noexcept { return rows_; }

    FileRecord commit() { return file_.commit(); }

private:
    AtomicFileWriter file_;
    std::size_t columns_;
    std::size_t rows_ = 0;
    std::string line_;
};

/// Summary of one command invocation. exit_code is derived from the outcome
/// fields by the command itself and stored alongside them.
struct RunManifest {
    std::string command;
    std::string config_path;
    std::string config_digest;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
    nlohmann::ordered_json outcome = nlohmann::ordered_json::object();
    std::vector<std::string> failures;
    std::vector<FileRecord> files;
    double wall_time_s = 0.0;
    int exit_code = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["config"] = {{"path", config_path}, {"sha256", config_digest}};
        j["parameters"] = parameters;
        j["outcome"] = outcome;
        j["failures"] = failures;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& f : files) arr.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
        j["files"] = arr;
        j["wall_time_s"] = wall_time_s;
        j["exit_code"] = exit_code;
        return j;
    }

    FileRecord write(const std::filesystem::path& dir) const {
        return write_file_atomic(dir / ("manifest_" + command + ".json"), to_json().dump(2) + "\n");
    }
};

}  // namespace ashc
