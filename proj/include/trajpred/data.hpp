#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "trajpred/errors.hpp"
#include "trajpred/geometry.hpp"
#include "trajpred/image.hpp"

namespace trajpred {

inline constexpr double kTimeStep = 0.4; // seconds between consecutive positions

enum class Units : std::uint8_t { meters = 0, pixels = 1 };

inline const char* units_name(Units u) { return u == Units::meters ? "meters" : "pixels"; }

struct TrackPoint {
    long long frame = 0;
    double t = 0.0;
    Vec2 pos;
};

/// One agent's contiguous track on the common time grid. Parsers split
/// tracks at frame gaps, so points are always stride-exact.
struct Trajectory {
    long long agent_id = 0;
    std::string label;
    Units units = Units::meters;
    std::vector<TrackPoint> points;

    void validate() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!std::isfinite(points[i].pos.x) || !std::isfinite(points[i].pos.y)) {
                throw DataError("trajectory " + std::to_string(agent_id) +
                                ": non-finite coordinate");
            }
            if (i > 0) {
                const double dt = points[i].t - points[i - 1].t;
                if (dt <= 0.0 || std::abs(dt - kTimeStep) > 1e-9) {
                    throw DataError("trajectory " + std::to_string(agent_id) +
                                    ": timestamps must increase by " + std::to_string(kTimeStep));
                }
            }
        }
    }
};

/// Neighbor observed over the scene window, padded to the full window with
/// a per-step validity mask (padded steps repeat the nearest observed point
/// and are excluded from attention).
struct NeighborTrack {
    long long agent_id = 0;
    std::vector<TrackPoint> points;
    std::vector<std::uint8_t> valid;
};

struct Scene {
    std::string dataset;
    long long agent_id = 0;
    long long start_frame = 0;
    Units units = Units::meters;
    std::vector<TrackPoint> observed; // length t_obs
    std::vector<TrackPoint> future;   // length t_pred
    std::vector<NeighborTrack> neighbors;
    std::shared_ptr<const BevImage> image; // optional

    std::vector<Vec2> observed_positions() const {
        std::vector<Vec2> v;
        v.reserve(observed.size());
        for (const auto& p : observed) v.push_back(p.pos);
        return v;
    }
    std::vector<Vec2> future_positions() const {
        std::vector<Vec2> v;
        v.reserve(future.size());
        for (const auto& p : future) v.push_back(p.pos);
        return v;
    }

    void validate(std::size_t t_obs = 8, std::size_t t_pred = 12) const {
        if (observed.size() != t_obs) {
            throw DataError("scene: observed length " + std::to_string(observed.size()) +
                            " != " + std::to_string(t_obs));
        }
        if (future.size() != t_pred) {
            throw DataError("scene: future length " + std::to_string(future.size()) +
                            " != " + std::to_string(t_pred));
        }
        std::vector<TrackPoint> all = observed;
        all.insert(all.end(), future.begin(), future.end());
        for (std::size_t i = 1; i < all.size(); ++i) {
            if (std::abs(all[i].t - all[i - 1].t - kTimeStep) > 1e-9) {
                throw DataError("scene: main track off the time grid");
            }
        }
        for (const auto& n : neighbors) {
            if (n.agent_id == agent_id) throw DataError("scene: main agent listed as neighbor");
            if (n.points.size() != t_obs || n.valid.size() != t_obs) {
                throw DataError("scene: neighbor window length mismatch");
            }
            bool any = false;
            for (std::size_t k = 0; k < t_obs; ++k) {
                any = any || n.valid[k];
                if (std::abs(n.points[k].t - observed[k].t) > 1e-9) {
                    throw DataError("scene: neighbor off the observed time grid");
                }
            }
            if (!any) throw DataError("scene: neighbor with no valid step");
        }
    }
};

/// One train/test fold.
struct SplitPlan {
    std::string name;
    std::vector<Scene> train;
    std::vector<Scene> test;
};

// ---- homography -------------------------------------------------------------

/// Row-major 3x3 projective map applied to annotation coordinates.
struct Homography {
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return Homography{}; }

    Vec2 apply(Vec2 p) const {
        const double w = h[6] * p.x + h[7] * p.y + h[8];
        if (std::abs(w) < 1e-300) throw NumericError("homography: zero denominator");
        return {(h[0] * p.x + h[1] * p.y + h[2]) / w, (h[3] * p.x + h[4] * p.y + h[5]) / w};
    }
};

inline Homography parse_homography(std::istream& is) {
    Homography out;
    for (std::size_t i = 0; i < 9; ++i) {
        if (!(is >> out.h[i])) throw ParseError("homography: expected 9 numbers");
    }
    return out;
}

inline Homography parse_homography_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open homography file '" + path + "'");
    return parse_homography(is);
}

// ---- ETH/UCY parsing -----------------------------------------------------------

namespace detail {

inline bool blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

/// Splits per-id rows into contiguous constant-stride segments and emits one
/// Trajectory per segment, ordered by (agent id, first frame).
inline std::vector<Trajectory> segment_tracks(
    std::map<long long, std::vector<std::pair<long long, Vec2>>>& rows_by_id,
    long long frame_stride, double seconds_per_frame, Units units, const std::string& label) {
    std::vector<Trajectory> out;
    for (auto& [id, rows] : rows_by_id) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].first == rows[i - 1].first) {
                throw DataError("non-monotone frames for id " + std::to_string(id) +
                                " (duplicate frame " + std::to_string(rows[i].first) + ")");
            }
        }
        Trajectory current;
        current.agent_id = id;
        current.label = label;
        current.units = units;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!current.points.empty() &&
                rows[i].first - current.points.back().frame != frame_stride) {
                if (!current.points.empty()) out.push_back(std::move(current));
                current = Trajectory{};
                current.agent_id = id;
                current.label = label;
                current.units = units;
            }
            TrackPoint p;
            p.frame = rows[i].first;
            p.t = static_cast<double>(rows[i].first) * seconds_per_frame;
            p.pos = rows[i].second;
            current.points.push_back(p);
        }
        if (!current.points.empty()) out.push_back(std::move(current));
    }
    return out;
}

} // namespace detail

/// Whitespace-delimited rows (frame, id, x, y) annotated at 2.5 Hz. The
/// smallest per-id frame increment defines the annotation stride; frame gaps
/// split a pedestrian's track into separate contiguous trajectories. When a
/// homography is given, coordinates are mapped through it (pixel annotations
/// to world meters).
inline std::vector<Trajectory> parse_eth_ucy(std::istream& is,
                                             const std::optional<Homography>& homography = {}) {
    std::map<long long, std::vector<std::pair<long long, Vec2>>> by_id;
    std::string line;
    std::size_t line_no = 0;
    long long stride = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::blank_or_comment(line)) continue;
        std::istringstream row(line);
        double frame_d = 0, id_d = 0, x = 0, y = 0;
        if (!(row >> frame_d >> id_d >> x >> y)) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected 'frame id x y', got '" + line + "'");
        }
        Vec2 p{x, y};
        if (homography) p = homography->apply(p);
        by_id[static_cast<long long>(std::llround(id_d))].push_back(
            {static_cast<long long>(std::llround(frame_d)), p});
    }
    // derive the annotation stride as the minimum positive per-id frame step
    for (auto& [id, rows] : by_id) {
        auto sorted = rows;
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            const long long d = sorted[i].first - sorted[i - 1].first;
            if (d > 0 && (stride == 0 || d < stride)) stride = d;
        }
    }
    if (stride == 0) stride = 1;
    return detail::segment_tracks(by_id, stride, kTimeStep / static_cast<double>(stride),
                                  Units::meters, "Pedestrian");
}

inline std::vector<Trajectory> parse_eth_ucy_file(
    const std::string& path, const std::optional<Homography>& homography = {}) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open annotation file '" + path + "'");
    return parse_eth_ucy(is, homography);
}

// ---- SDD parsing -----------------------------------------------------------

struct SddOptions {
    std::set<std::string> keep_classes = {"Pedestrian"};
    std::set<std::string> drop_flags = {"lost"};
    long long frame_stride = 12; // 30 fps video sampled to the 0.4 s grid
};

inline const std::set<std::string>& sdd_known_labels() {
    static const std::set<std::string> labels = {"Pedestrian", "Biker",        "Bicyclist",
                                                 "Skateboarder", "Cart",        "Car",
                                                 "Bus"};
    return labels;
}

/// SDD annotation rows: id xmin ymin xmax ymax frame lost occluded generated
/// "label". Bounding boxes collapse to center points in pixels; frames are
/// subsampled to the 0.4 s grid and gaps split tracks.
inline std::vector<Trajectory> parse_sdd(std::istream& is, const SddOptions& opts = {}) {
    std::map<long long, std::vector<std::pair<long long, Vec2>>> by_id;
    std::map<long long, std::string> label_by_id;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::blank_or_comment(line)) continue;
        std::istringstream row(line);
        long long id = 0, frame = 0;
        double xmin = 0, ymin = 0, xmax = 0, ymax = 0;
        int lost = 0, occluded = 0, generated = 0;
        std::string label;
        if (!(row >> id >> xmin >> ymin >> xmax >> ymax >> frame >> lost >> occluded >>
              generated >> label)) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected SDD annotation row, got '" + line + "'");
        }
        if (label.size() >= 2 && label.front() == '"' && label.back() == '"') {
            label = label.substr(1, label.size() - 2);
        }
        if (!sdd_known_labels().count(label)) {
            throw DataError("line " + std::to_string(line_no) + ": unknown agent label '" +
                            label + "'");
        }
        if (!opts.keep_classes.count(label)) continue;
        if ((lost && opts.drop_flags.count("lost")) ||
            (occluded && opts.drop_flags.count("occluded")) ||
            (generated && opts.drop_flags.count("generated"))) {
            continue;
        }
        if (frame % opts.frame_stride != 0) continue;
        by_id[id].push_back({frame, Vec2{(xmin + xmax) / 2.0, (ymin + ymax) / 2.0}});
        label_by_id[id] = label;
    }
    auto tracks = detail::segment_tracks(by_id, opts.frame_stride,
                                         kTimeStep / static_cast<double>(opts.frame_stride),
                                         Units::pixels, "");
    for (auto& t : tracks) t.label = label_by_id[t.agent_id];
    return tracks;
}

inline std::vector<Trajectory> parse_sdd_file(const std::string& path,
                                              const SddOptions& opts = {}) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open annotation file '" + path + "'");
    return parse_sdd(is, opts);
}

// ---- scene assembly ------------------------------------------------------------

struct SceneBuildOptions {
    std::size_t t_obs = 8;
    std::size_t t_pred = 12;
    std::size_t stride = 1; // window advance in timesteps
    std::string dataset;
    std::shared_ptr<const BevImage> image;
};

/// Slides a (t_obs + t_pred)-step window over every trajectory. Each full
/// window yields one Scene whose neighbors are all other agents with at
/// least one point inside the observed span, padded to the window with a
/// validity mask. Tracks are contiguous by construction, so windows never
/// span a gap.
inline std::vector<Scene> build_scenes(const std::vector<Trajectory>& tracks,
                                       const SceneBuildOptions& opts = {}) {
    const std::size_t window = opts.t_obs + opts.t_pred;
    std::vector<Scene> scenes;
    for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
        const Trajectory& main = tracks[ti];
        main.validate();
        if (main.points.size() < window) continue;
        for (std::size_t start = 0; start + window <= main.points.size();
             start += opts.stride) {
            Scene scene;
            scene.dataset = opts.dataset;
            scene.agent_id = main.agent_id;
            scene.units = main.units;
            scene.image = opts.image;
            scene.observed.assign(main.points.begin() + start,
                                  main.points.begin() + start + opts.t_obs);
            scene.future.assign(main.points.begin() + start + opts.t_obs,
                                main.points.begin() + start + window);
            scene.start_frame = scene.observed.front().frame;

            const double t0 = scene.observed.front().t;
            const double t1 = scene.observed.back().t;
            for (std::size_t tj = 0; tj < tracks.size(); ++tj) {
                const Trajectory& other = tracks[tj];
                if (other.agent_id == main.agent_id) continue;
                std::vector<const TrackPoint*> in_window;
                for (const auto& p : other.points) {
                    if (p.t > t0 - 1e-9 && p.t < t1 + 1e-9) in_window.push_back(&p);
                }
                if (in_window.empty()) continue;
                NeighborTrack n;
                n.agent_id = other.agent_id;
                n.points.resize(opts.t_obs);
                n.valid.assign(opts.t_obs, 0);
                for (std::size_t k = 0; k < opts.t_obs; ++k) {
                    const double target = scene.observed[k].t;
                    const TrackPoint* nearest = in_window.front();
                    for (const TrackPoint* p : in_window) {
                        if (std::abs(p->t - target) < std::abs(nearest->t - target)) {
                            nearest = p;
                        }
                    }
                    n.points[k] = *nearest;
                    n.points[k].t = target; // pad onto the scene grid
                    n.valid[k] = std::abs(nearest->t - target) < 1e-9 ? 1 : 0;
                }
                scene.neighbors.push_back(std::move(n));
            }
            scene.validate(opts.t_obs, opts.t_pred);
            scenes.push_back(std::move(scene));
        }
    }
    return scenes;
}

// ---- splits -----------------------------------------------------------------

/// Leave-one-out folds over named sub-datasets: fold k tests on dataset k
/// and trains on all the others.
inline std::vector<SplitPlan> loocv_splits(
    const std::map<std::string, std::vector<Scene>>& datasets) {
    if (datasets.size() < 2) {
        throw ConfigError("loocv_splits: need at least 2 datasets, got " +
                          std::to_string(datasets.size()));
    }
    std::vector<SplitPlan> folds;
    for (const auto& [held_out, test_scenes] : datasets) {
        SplitPlan fold;
        fold.name = held_out;
        fold.test = test_scenes;
        for (const auto& [name, scenes] : datasets) {
            if (name == held_out) continue;
            fold.train.insert(fold.train.end(), scenes.begin(), scenes.end());
        }
        folds.push_back(std::move(fold));
    }
    return folds;
}

// ---- scene cache -------------------------------------------------------------

// Binary container, little-endian throughout:
//   magic "TJPSCN1\0", u32 version (=1)
//   u64 image_count, then per image: u64 height, u64 width,
//     f64 meters_per_pixel, f64 origin_x, f64 origin_y, height*width*3 bytes
//   u64 scene_count, then per scene:
//     u32 dataset_len + bytes, i64 agent_id, i64 start_frame, u8 units,
//     i64 image_index (-1 if none),
//     u32 n_observed + per point (i64 frame, f64 t, f64 x, f64 y),
//     u32 n_future + points, u32 n_neighbors + per neighbor:
//       i64 agent_id, u32 n_points + points, n_points validity bytes.
inline constexpr char kSceneCacheMagic[8] = {'T', 'J', 'P', 'S', 'C', 'N', '1', '\0'};

namespace detail {

template <typename V>
void write_pod(std::ostream& os, const V& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::istream& is) {
    V v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(V));
    if (!is) throw IoError("scene cache: truncated file");
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    const auto n = read_pod<std::uint32_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw IoError("scene cache: truncated string");
    return s;
}

inline void write_points(std::ostream& os, const std::vector<TrackPoint>& pts) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(pts.size()));
    for (const auto& p : pts) {
        write_pod<std::int64_t>(os, p.frame);
        write_pod<double>(os, p.t);
        write_pod<double>(os, p.pos.x);
        write_pod<double>(os, p.pos.y);
    }
}

inline std::vector<TrackPoint> read_points(std::istream& is) {
    const auto n = read_pod<std::uint32_t>(is);
    std::vector<TrackPoint> pts(n);
    for (auto& p : pts) {
        p.frame = read_pod<std::int64_t>(is);
        p.t = read_pod<double>(is);
        p.pos.x = read_pod<double>(is);
        p.pos.y = read_pod<double>(is);
    }
    return pts;
}

} // namespace detail

inline void save_scene_cache(const std::string& path, const std::vector<Scene>& scenes) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.write(kSceneCacheMagic, 8);
    detail::write_pod<std::uint32_t>(os, 1);

    // deduplicate shared images by pointer identity
    std::vector<const BevImage*> images;
    std::map<const BevImage*, std::int64_t> image_index;
    for (const auto& s : scenes) {
        if (s.image && !image_index.count(s.image.get())) {
            image_index[s.image.get()] = static_cast<std::int64_t>(images.size());
            images.push_back(s.image.get());
        }
    }
    detail::write_pod<std::uint64_t>(os, images.size());
    for (const BevImage* img : images) {
        detail::write_pod<std::uint64_t>(os, img->height);
        detail::write_pod<std::uint64_t>(os, img->width);
        detail::write_pod<double>(os, img->meters_per_pixel);
        detail::write_pod<double>(os, img->origin.x);
        detail::write_pod<double>(os, img->origin.y);
        for (float v : img->pixels) {
            const float c = std::min(1.0f, std::max(0.0f, v));
            detail::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(c * 255.0f + 0.5f));
        }
    }

    detail::write_pod<std::uint64_t>(os, scenes.size());
    for (const auto& s : scenes) {
        detail::write_string(os, s.dataset);
        detail::write_pod<std::int64_t>(os, s.agent_id);
        detail::write_pod<std::int64_t>(os, s.start_frame);
        detail::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(s.units));
        detail::write_pod<std::int64_t>(os, s.image ? image_index[s.image.get()] : -1);
        detail::write_points(os, s.observed);
        detail::write_points(os, s.future);
        detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.neighbors.size()));
        for (const auto& n : s.neighbors) {
            detail::write_pod<std::int64_t>(os, n.agent_id);
            detail::write_points(os, n.points);
            for (std::uint8_t v : n.valid) detail::write_pod<std::uint8_t>(os, v);
        }
    }
    if (!os) throw IoError("failed while writing '" + path + "'");
}

inline std::vector<Scene> load_scene_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open scene cache '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kSceneCacheMagic, 8) != 0) {
        throw IoError("'" + path + "' is not a scene cache");
    }
    const auto version = detail::read_pod<std::uint32_t>(is);
    if (version != 1) {
        throw IoError("scene cache version " + std::to_string(version) + " unsupported");
    }
    const auto n_images = detail::read_pod<std::uint64_t>(is);
    std::vector<std::shared_ptr<const BevImage>> images;
    for (std::uint64_t i = 0; i < n_images; ++i) {
        const auto h = detail::read_pod<std::uint64_t>(is);
        const auto w = detail::read_pod<std::uint64_t>(is);
        auto img = std::make_shared<BevImage>(h, w);
        img->meters_per_pixel = detail::read_pod<double>(is);
        img->origin.x = detail::read_pod<double>(is);
        img->origin.y = detail::read_pod<double>(is);
        for (auto& v : img->pixels) {
            v = static_cast<float>(detail::read_pod<std::uint8_t>(is)) / 255.0f;
        }
        images.push_back(img);
    }
    const auto n_scenes = detail::read_pod<std::uint64_t>(is);
    std::vector<Scene> scenes(n_scenes);
    for (auto& s : scenes) {
        s.dataset = detail::read_string(is);
        s.agent_id = detail::read_pod<std::int64_t>(is);
        s.start_frame = detail::read_pod<std::int64_t>(is);
        s.units = static_cast<Units>(detail::read_pod<std::uint8_t>(is));
        const auto img_idx = detail::read_pod<std::int64_t>(is);
        if (img_idx >= 0) s.image = images.at(static_cast<std::size_t>(img_idx));
        s.observed = detail::read_points(is);
        s.future = detail::read_points(is);
        const auto n_neighbors = detail::read_pod<std::uint32_t>(is);
        s.neighbors.resize(n_neighbors);
        for (auto& n : s.neighbors) {
            n.agent_id = detail::read_pod<std::int64_t>(is);
            n.points = detail::read_points(is);
            n.valid.resize(n.points.size());
            for (auto& v : n.valid) v = detail::read_pod<std::uint8_t>(is);
        }
    }
    return scenes;
}

} // namespace trajpred
