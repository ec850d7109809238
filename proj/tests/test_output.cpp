// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ashc/output.hpp"
#include "test_support.hpp"

using namespace ashc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
    const fs::path d = fs::temp_directory_path() / ("ashc_output_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(FormatDouble, SeventeenSignificantDigits) {
    EXPECT_EQ(format_double(0.0), "0");
    EXPECT_EQ(format_double(1.0), "1");
    EXPECT_EQ(format_double(-2.5), "-2.5");
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(1e-300), "1e-300");
    EXPECT_EQ(format_double(1.0 / 3.0), "0.33333333333333331");
    EXPECT_EQ(format_double(12.0), "12");
}

TEST(FormatDouble, RoundTripsExactly) {
    ashc::testing::Gen gen(91);
    for (int k = 0; k < 20000; ++k) {
        const double scale = std::pow(10.0, gen.uniform(-30, 30));
        const double v = gen.normal() * scale;
        const std::string s = format_double(v);
        double back = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), back);
        ASSERT_EQ(ec, std::errc());
        ASSERT_EQ(ptr, s.data() + s.size());
        ASSERT_EQ(back, v) << s;
        ASSERT_EQ(s.find(','), std::string::npos);
    }
    const double extremes[] = {std::numeric_limits<double>::max(), std::numeric_limits<double>::min(),
                               std::numeric_limits<double>::denorm_min(), -0.0};
    for (double v : extremes) {
        const std::string s = format_double(v);
        double back = 1.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, v);
    }
}

TEST(Sha256, KnownDigests) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
              "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST(Sha256, IncrementalMatchesOneShot) {
    std::string data;
    for (int i = 0; i < 10000; ++i) data += static_cast<char>('a' + i % 26);
    Sha256 h;
    for (std::size_t i = 0; i < data.size(); i += 37) h.update(std::string_view(data).substr(i, 37));
    EXPECT_EQ(h.hex(), sha256_hex(data));
}

TEST(AtomicFileWriter, CommitRenamesAndReportsChecksum) {
    const fs::path d = scratch_dir("commit");
    const FileRecord r = write_file_atomic(d / "a.txt", "hello\n");
    EXPECT_EQ(r.name, "a.txt");
    EXPECT_EQ(r.bytes, 6u);
    EXPECT_EQ(r.sha256, sha256_hex("hello\n"));
    EXPECT_EQ(slurp(d / "a.txt"), "hello\n");
    EXPECT_FALSE(fs::exists(d / "a.txt.tmp"));
    // Replacing keeps a complete file at every moment.
    write_file_atomic(d / "a.txt", "second\n");
    EXPECT_EQ(slurp(d / "a.txt"), "second\n");
    fs::remove_all(d);
}

TEST(AtomicFileWriter, AbandonedWriteLeavesNothing) {
    const fs::path d = scratch_dir("abandon");
    {
        AtomicFileWriter w(d / "b.txt");
        w.write("partial");
        EXPECT_TRUE(fs::exists(d / "b.txt.tmp"));
    }
    EXPECT_FALSE(fs::exists(d / "b.txt"));
    EXPECT_FALSE(fs::exists(d / "b.txt.tmp"));
    EXPECT_THROW(AtomicFileWriter(d / "missing" / "c.txt"), Error);
    fs::remove_all(d);
}

TEST(CsvWriter, HeaderRowsAndWidthCheck) {
    const fs::path d = scratch_dir("csv");
    CsvWriter w(d / "t.csv", {"t", "x"});
    w.row({0.0, 0.1});
    w.row({1e-4, -3.0});
    EXPECT_THROW(w.row({1.0}), ArgumentError);
    EXPECT_EQ(w.rows(), 2u);
    const FileRecord r = w.commit();
    const std::string text = slurp(d / "t.csv");
    EXPECT_EQ(text, "t,x\n0,0.10000000000000001\n0.0001,-3\n");
    EXPECT_EQ(r.sha256, sha256_hex(text));
    EXPECT_THROW(CsvWriter(d / "e.csv", {}), ArgumentError);
    fs::remove_all(d);
}

TEST(RunManifest, JsonShapeAndFileName) {
    const fs::path d = scratch_dir("manifest");
    RunManifest m;
    m.command = "bound";
    m.config_digest = "00";
    m.outcome["bound_value"] = 1.5;
    m.failures.push_back("lmi");
    m.files.push_back({"x.csv", "ab", 3});
    m.exit_code = 1;
    const FileRecord r = m.write(d);
    EXPECT_EQ(r.name, "manifest_bound.json");
    const auto j = nlohmann::json::parse(slurp(d / r.name));
    EXPECT_EQ(j["command"], "bound");
    EXPECT_EQ(j["config"]["sha256"], "00");
    EXPECT_EQ(j["outcome"]["bound_value"], 1.5);
    EXPECT_EQ(j["failures"][0], "lmi");
    EXPECT_EQ(j["files"][0]["name"], "x.csv");
    EXPECT_EQ(j["files"][0]["bytes"], 3);
    EXPECT_EQ(j["exit_code"], 1);
    fs::remove_all(d);
}
