// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scene serialization. Length-delimited binary records, little-endian:
//
//   record  := u32 payload_size, payload
//   payload := magic "DGK1", u16 version (=1), scene fields in declaration
//              order (target_history, nearby, map, future_gt, nearby_future,
//              drivable, tick_duration, scene_id, frame)
//
// plus a human-readable JSON-lines debug writer.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgk/scene.hpp"

static_assert(std::endian::native == std::endian::little,
              "scene serialization assumes a little-endian host");

namespace dgk {

inline constexpr char kSceneMagic[4] = {'D', 'G', 'K', '1'};
inline constexpr std::uint16_t kSceneVersion = 1;

namespace detail {

class ByteWriter {
public:
    template <class T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void put_vec2(const Vec2& v) {
        put(v.x);
        put(v.y);
    }
    void put_state(const AgentState& s) {
        put_vec2(s.position);
        put(s.heading);
        put_vec2(s.velocity);
        put_vec2(s.acceleration);
        put<std::uint8_t>(s.valid ? 1 : 0);
    }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(const char* data, std::size_t size, std::uint64_t base_offset,
               const char* context = "scene record")
        : data_(data), size_(size), base_(base_offset), context_(context) {}

    template <class T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos_ + sizeof(T) > size_) {
            throw IoError{std::string{"truncated "} + context_, base_ + pos_};
        }
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    Vec2 get_vec2() {
        Vec2 v;
        v.x = get<double>();
        v.y = get<double>();
        return v;
    }
    AgentState get_state() {
        AgentState s;
        s.position = get_vec2();
        s.heading = get<double>();
        s.velocity = get_vec2();
        s.acceleration = get_vec2();
        s.valid = get<std::uint8_t>() != 0;
        return s;
    }

    std::size_t position() const noexcept { return pos_; }

private:
    const char* data_;
    std::size_t size_;
    std::uint64_t base_;
    const char* context_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_scene(const Scene& scene) {
    detail::ByteWriter w;
    for (const char c : kSceneMagic) {
        w.put(c);
    }
    w.put(kSceneVersion);

    w.put<std::uint32_t>(static_cast<std::uint32_t>(scene.target_history.size()));
    for (const auto& s : scene.target_history) {
        w.put_state(s);
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(scene.nearby.size()));
    for (const auto& t : scene.nearby) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(t.type));
        w.put<std::int64_t>(t.id);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(t.states.size()));
        for (const auto& s : t.states) {
            w.put_state(s);
        }
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(scene.map.size()));
    for (const auto& pl : scene.map) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(pl.semantic));
        w.put<std::int64_t>(pl.id);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(pl.points.size()));
        for (const auto& p : pl.points) {
            w.put_vec2(p);
        }
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(scene.future_gt.size()));
    for (const auto& p : scene.future_gt) {
        w.put_vec2(p);
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(scene.nearby_future.size()));
    for (const auto& t : scene.nearby_future) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(t.size()));
        for (const auto& s : t) {
            w.put_state(s);
        }
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(scene.drivable.size()));
    for (const auto& poly : scene.drivable) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(poly.size()));
        for (const auto& p : poly) {
            w.put_vec2(p);
        }
    }
    w.put(scene.tick_duration);
    w.put(scene.scene_id);
    w.put_vec2(scene.frame.origin);
    w.put(scene.frame.heading);
    return w.bytes();
}

inline Scene decode_scene(const char* data, std::size_t size, std::uint64_t base_offset) {
    detail::ByteReader r{data, size, base_offset};
    const auto magic = r.get<std::array<char, 4>>();
    if (std::memcmp(magic.data(), kSceneMagic, 4) != 0) {
        throw IoError{"bad scene magic", base_offset};
    }
    const auto version = r.get<std::uint16_t>();
    if (version != kSceneVersion) {
        throw IoError{"unsupported scene version " + std::to_string(version), base_offset};
    }
    Scene s;
    const auto nh = r.get<std::uint32_t>();
    s.target_history.reserve(nh);
    for (std::uint32_t i = 0; i < nh; ++i) {
        s.target_history.push_back(r.get_state());
    }
    const auto na = r.get<std::uint32_t>();
    s.nearby.reserve(na);
    for (std::uint32_t i = 0; i < na; ++i) {
        AgentTrack t;
        t.type = static_cast<AgentType>(r.get<std::uint8_t>());
        t.id = r.get<std::int64_t>();
        const auto ns = r.get<std::uint32_t>();
        t.states.reserve(ns);
        for (std::uint32_t j = 0; j < ns; ++j) {
            t.states.push_back(r.get_state());
        }
        s.nearby.push_back(std::move(t));
    }
    const auto nm = r.get<std::uint32_t>();
    s.map.reserve(nm);
    for (std::uint32_t i = 0; i < nm; ++i) {
        Polyline pl;
        pl.semantic = static_cast<Semantic>(r.get<std::uint8_t>());
        pl.id = r.get<std::int64_t>();
        const auto np = r.get<std::uint32_t>();
        pl.points.reserve(np);
        for (std::uint32_t j = 0; j < np; ++j) {
            pl.points.push_back(r.get_vec2());
        }
        s.map.push_back(std::move(pl));
    }
    const auto nf = r.get<std::uint32_t>();
    s.future_gt.reserve(nf);
    for (std::uint32_t i = 0; i < nf; ++i) {
        s.future_gt.push_back(r.get_vec2());
    }
    const auto nnf = r.get<std::uint32_t>();
    s.nearby_future.reserve(nnf);
    for (std::uint32_t i = 0; i < nnf; ++i) {
        const auto nt = r.get<std::uint32_t>();
        std::vector<AgentState> t;
        t.reserve(nt);
        for (std::uint32_t j = 0; j < nt; ++j) {
            t.push_back(r.get_state());
        }
        s.nearby_future.push_back(std::move(t));
    }
    const auto nd = r.get<std::uint32_t>();
    s.drivable.reserve(nd);
    for (std::uint32_t i = 0; i < nd; ++i) {
        const auto np = r.get<std::uint32_t>();
        Polygon poly;
        poly.reserve(np);
        for (std::uint32_t j = 0; j < np; ++j) {
            poly.push_back(r.get_vec2());
        }
        s.drivable.push_back(std::move(poly));
    }
    s.tick_duration = r.get<double>();
    s.scene_id = r.get<std::int64_t>();
    s.frame.origin = r.get_vec2();
    s.frame.heading = r.get<double>();
    return s;
}

/// Appends length-delimited scene records to a file.
class SceneWriter {
public:
    explicit SceneWriter(const std::string& path) : out_(path, std::ios::binary) {
        DGK_REQUIRE(out_.good(), "cannot open " + path + " for writing");
    }

    void write(const Scene& scene) {
        const std::string payload = encode_scene(scene);
        const auto len = static_cast<std::uint32_t>(payload.size());
        out_.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out_.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        ++count_;
    }

    std::uint64_t count() const { return count_; }

    void close() { out_.close(); }

private:
    std::ofstream out_;
    std::uint64_t count_ = 0;
};

/// Streaming reader: scenes are decoded one record at a time, so memory use
/// is bounded by the largest single record.
class SceneReader {
public:
    explicit SceneReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        DGK_REQUIRE(in_.good(), "cannot open " + path);
    }

    /// Reads the next scene; returns false at a clean end of file.
    bool next(Scene& out) {
        std::uint32_t len = 0;
        in_.read(reinterpret_cast<char*>(&len), sizeof(len));
        if (in_.gcount() == 0 && in_.eof()) {
            return false;
        }
        if (in_.gcount() != sizeof(len)) {
            throw IoError{"truncated record header in " + path_, offset_};
        }
        buf_.resize(len);
        in_.read(buf_.data(), static_cast<std::streamsize>(len));
        if (in_.gcount() != static_cast<std::streamsize>(len)) {
            throw IoError{"truncated record payload in " + path_, offset_ + sizeof(len)};
        }
        out = decode_scene(buf_.data(), buf_.size(), offset_ + sizeof(len));
        offset_ += sizeof(len) + len;
        return true;
    }

    std::vector<Scene> read_all() {
        std::vector<Scene> scenes;
        Scene s;
        while (next(s)) {
            scenes.push_back(std::move(s));
            s = Scene{};
        }
        return scenes;
    }

private:
    std::ifstream in_;
    std::string path_;
    std::string buf_;
    std::uint64_t offset_ = 0;
};

inline nlohmann::json scene_to_json(const Scene& s) {
    nlohmann::json j;
    auto state_json = [](const AgentState& a) {
        return nlohmann::json{{"x", a.position.x},     {"y", a.position.y},
                              {"heading", a.heading},  {"vx", a.velocity.x},
                              {"vy", a.velocity.y},    {"ax", a.acceleration.x},
                              {"ay", a.acceleration.y}, {"valid", a.valid}};
    };
    j["scene_id"] = s.scene_id;
    j["tick_duration"] = s.tick_duration;
    j["frame"] = {{"x", s.frame.origin.x}, {"y", s.frame.origin.y}, {"heading", s.frame.heading}};
    for (const auto& a : s.target_history) {
        j["target_history"].push_back(state_json(a));
    }
    j["nearby"] = nlohmann::json::array();
    for (const auto& t : s.nearby) {
        nlohmann::json tj;
        tj["id"] = t.id;
        tj["type"] = static_cast<int>(t.type);
        for (const auto& a : t.states) {
            tj["states"].push_back(state_json(a));
        }
        j["nearby"].push_back(tj);
    }
    j["map"] = nlohmann::json::array();
    for (const auto& pl : s.map) {
        nlohmann::json pj;
        pj["id"] = pl.id;
        pj["semantic"] = static_cast<int>(pl.semantic);
        for (const auto& p : pl.points) {
            pj["points"].push_back({p.x, p.y});
        }
        j["map"].push_back(pj);
    }
    j["future_gt"] = nlohmann::json::array();
    for (const auto& p : s.future_gt) {
        j["future_gt"].push_back({p.x, p.y});
    }
    return j;
}

/// Debug writer: one JSON object per line.
inline void write_scenes_jsonl(const std::string& path, const std::vector<Scene>& scenes) {
    std::ofstream out{path};
    DGK_REQUIRE(out.good(), "cannot open " + path + " for writing");
    for (const auto& s : scenes) {
        out << scene_to_json(s).dump() << '\n';
    }
}

}  // namespace dgk
