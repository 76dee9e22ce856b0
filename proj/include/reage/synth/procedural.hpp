#pragma once

#include "reage/core/random.hpp"
#include "reage/datamodel/clip.hpp"
#include "reage/datamodel/frame.hpp"
#include "reage/datamodel/luma.hpp"
#include "reage/synth/pose.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace reage::synth {

/// Youngest and oldest ages of the wrinkle ramp.
inline constexpr double kWrinkleOnsetAge = 18.0;
inline constexpr double kWrinkleFullAge = 85.0;

/// 0 at or below the onset age, 1 at or above the full age, linear between.
inline double wrinkle_strength(double age)
{
    return std::clamp((age - kWrinkleOnsetAge) / (kWrinkleFullAge - kWrinkleOnsetAge), 0.0, 1.0);
}

/// Pixel boxes over the four wrinkle zones (lateral to each outer eye corner,
/// above-outside each mouth corner), placed relative to the landmarks in
/// units of the inter-ocular distance.
inline std::array<PixelBox, 4> wrinkle_zone_boxes(const Landmarks& lm, int height, int width)
{
    const double dx = lm.right_eye_outer.x - lm.left_eye_outer.x, dy = lm.right_eye_outer.y - lm.left_eye_outer.y;
    const double iod = std::max(std::hypot(dx, dy), 1.0);
    const double ux = dx / iod, uy = dy / iod; // left-to-right axis
    const double side = 0.2 * iod; // clear of the eye and lip outlines
    auto box = [&](Point2 p, double out, double up, double dir) {
        return centred_box(p.x + dir * out * iod * ux + up * iod * uy, p.y + dir * out * iod * uy - up * iod * ux, side,
                           height, width);
    };
    return {box(lm.left_eye_outer, 0.2, 0.0, -1.0), box(lm.right_eye_outer, 0.2, 0.0, 1.0),
            box(lm.mouth_left, 0.2, 0.07, -1.0), box(lm.mouth_right, 0.2, 0.07, 1.0)};
}

/// Mean high-pass luma energy over the wrinkle zones.
inline double wrinkle_band_energy(const Frame& f, const Landmarks& lm)
{
    const GrayImage hp = high_pass(luma255(f));
    double e = 0.0;
    for (const auto& b : wrinkle_zone_boxes(lm, f.height(), f.width())) e += mean_square(hp, b);
    return e / 4.0;
}

/// Low-frequency face geometry and colours. Everything here derives from the
/// identity seed alone, so all ages of a subject share it.
struct FaceIdentity {
    std::array<double, 3> background{};
    std::array<double, 3> skin{};
    std::array<double, 3> hair{};
    std::array<double, 3> iris{};
    std::array<double, 3> lips{};
    double face_rx = 0.62, face_ry = 0.8, face_cy = 0.05;
    double hairline = -0.5;
    double eye_y = -0.17, eye_half_sep = 0.26, eye_rx = 0.1, eye_ry = 0.05;
    double brow_gap = 0.14;
    double mouth_y = 0.42, mouth_hw = 0.17, lip_h = 0.045;

    static FaceIdentity from_seed(std::uint64_t seed)
    {
        Rng rng(derive_seed(seed, "face"));
        FaceIdentity f;
        auto tone = [&](double lo, double hi) { return uniform(rng, lo, hi); };
        const double bg = tone(-0.85, -0.35);
        f.background = {bg + tone(-0.15, 0.15), bg + tone(-0.15, 0.15), bg + tone(-0.15, 0.15)};
        const double s = tone(0.05, 0.55);
        f.skin = {s + 0.25, s + 0.02, s - 0.15};
        const double h = tone(-0.9, -0.4);
        f.hair = {h + tone(0.0, 0.2), h + tone(0.0, 0.1), h};
        f.iris = {tone(-0.9, -0.3), tone(-0.9, -0.3), tone(-0.9, -0.3)};
        f.lips = {tone(0.2, 0.5), tone(-0.5, -0.2), tone(-0.4, -0.1)};
        const double cheek = tone(0.33, 0.38); // face edge beyond the outer eye corner
        f.face_ry = tone(0.74, 0.84);
        f.hairline = tone(-0.58, -0.46);
        f.eye_y = tone(-0.22, -0.13);
        f.eye_half_sep = tone(0.23, 0.29);
        f.eye_rx = tone(0.085, 0.11);
        f.eye_ry = f.eye_rx * tone(0.45, 0.6);
        f.face_rx = f.eye_half_sep + f.eye_rx + cheek;
        f.brow_gap = tone(0.11, 0.15);
        f.mouth_y = tone(0.38, 0.46);
        f.mouth_hw = tone(0.14, 0.19);
        f.lip_h = tone(0.035, 0.05);
        return f;
    }

    bool operator==(const FaceIdentity&) const = default;
};

/// Deterministic face-like renderer. Geometry lives in canonical coordinates
/// (u right, v down, both in [-1, 1]); a pose maps canonical space onto the
/// frame with an affine transform, and expression coefficients displace
/// local regions. Age controls striped darkening near the outer eye corners
/// and beside the mouth, plus greying of scalp hair and a slight skin
/// darkening. Brows keep their colour.
class ProceduralFace {
public:
    static constexpr double kFaceScale = 0.9;
    static constexpr double kWrinklePeriod = 0.12;
    static constexpr double kWrinkleDepth = 0.8;
    static constexpr int kSupersample = 2;

    struct Vec2 {
        double u = 0, v = 0;
    };

    Frame render(const FaceIdentity& id, double age, const PoseExpressionSample& pose, int resolution) const
    {
        const Affine a = Affine::from_pose(pose);
        const double strength = wrinkle_strength(age);
        const int n = resolution;
        std::vector<float> data(3u * static_cast<std::size_t>(n) * n);
        const double inv = 1.0 / (kSupersample * kSupersample);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                std::array<double, 3> acc{};
                for (int sy = 0; sy < kSupersample; ++sy)
                    for (int sx = 0; sx < kSupersample; ++sx) {
                        const double px = (x + (sx + 0.5) / kSupersample) / n * 2.0 - 1.0;
                        const double py = (y + (sy + 0.5) / kSupersample) / n * 2.0 - 1.0;
                        const Vec2 q = unwarp_expression(id, pose, a.inverse({px, py}));
                        const auto c = shade(id, strength, q);
                        for (int k = 0; k < 3; ++k) acc[k] += c[k];
                    }
                for (int k = 0; k < 3; ++k)
                    data[(static_cast<std::size_t>(k) * n + y) * n + x] = static_cast<float>(acc[k] * inv);
            }
        return Frame(n, n, 3, std::move(data));
    }

    /// Outer eye corners and mouth corners in pixel coordinates.
    Landmarks landmarks(const FaceIdentity& id, const PoseExpressionSample& pose, int resolution) const
    {
        const Affine a = Affine::from_pose(pose);
        auto to_pixels = [&](Vec2 q) {
            const Vec2 p = a.forward(warp_expression(id, pose, q));
            return Point2{(p.u + 1.0) * 0.5 * resolution - 0.5, (p.v + 1.0) * 0.5 * resolution - 0.5};
        };
        const double ex = id.eye_half_sep + id.eye_rx;
        return {to_pixels({-ex, id.eye_y}), to_pixels({ex, id.eye_y}), to_pixels({-id.mouth_hw, id.mouth_y}),
                to_pixels({id.mouth_hw, id.mouth_y})};
    }

private:
    struct Affine {
        // p = m * q + t
        double m00 = 1, m01 = 0, m10 = 0, m11 = 1, tx = 0, ty = 0;

        static Affine from_pose(const PoseExpressionSample& pose)
        {
            const double yaw = pose.rotation[0], pitch = pose.rotation[1], roll = pose.rotation[2];
            const double cr = std::cos(roll), sr = std::sin(roll);
            const double sxf = kFaceScale * std::cos(yaw), syf = kFaceScale * std::cos(pitch);
            Affine a;
            a.m00 = cr * sxf;
            a.m01 = -sr * syf;
            a.m10 = sr * sxf;
            a.m11 = cr * syf;
            a.tx = 0.25 * std::sin(yaw) + 2.0 * pose.translation[0];
            a.ty = 0.25 * std::sin(pitch) + 2.0 * pose.translation[1];
            return a;
        }

        Vec2 forward(Vec2 q) const { return {m00 * q.u + m01 * q.v + tx, m10 * q.u + m11 * q.v + ty}; }

        Vec2 inverse(Vec2 p) const
        {
            const double det = m00 * m11 - m01 * m10;
            const double x = p.u - tx, y = p.v - ty;
            return {(m11 * x - m01 * y) / det, (-m10 * x + m00 * y) / det};
        }
    };

    struct Bump {
        Vec2 centre;
        Vec2 shift;
        double sigma;
    };

    /// Displacement bases: mouth opening, smile, brow raise, cheek shift.
    /// Coefficients beyond the fourth reuse the bases cyclically.
    static std::vector<Bump> expression_bumps(const FaceIdentity& id, std::size_t k)
    {
        const double brow_y = id.eye_y - id.brow_gap;
        switch (k % 4) {
        case 0: return {{{0.0, id.mouth_y + 0.05}, {0.0, 0.05}, 0.1}};
        case 1:
            return {{{-id.mouth_hw, id.mouth_y}, {-0.03, -0.04}, 0.07}, {{id.mouth_hw, id.mouth_y}, {0.03, -0.04}, 0.07}};
        case 2:
            return {{{-id.eye_half_sep, brow_y}, {0.0, -0.05}, 0.1}, {{id.eye_half_sep, brow_y}, {0.0, -0.05}, 0.1}};
        default: return {{{0.0, 0.25}, {0.04, 0.0}, 0.25}};
        }
    }

    static Vec2 displacement(const FaceIdentity& id, const PoseExpressionSample& pose, Vec2 q)
    {
        Vec2 d;
        for (std::size_t k = 0; k < pose.expression.size(); ++k) {
            const double e = pose.expression[k];
            if (e == 0.0) continue;
            for (const auto& b : expression_bumps(id, k)) {
                const double du = q.u - b.centre.u, dv = q.v - b.centre.v;
                const double g = std::exp(-(du * du + dv * dv) / (b.sigma * b.sigma));
                d.u += e * b.shift.u * g;
                d.v += e * b.shift.v * g;
            }
        }
        return d;
    }

    // Backward warp used for sampling texture: content moves by +displacement.
    static Vec2 unwarp_expression(const FaceIdentity& id, const PoseExpressionSample& pose, Vec2 q)
    {
        const Vec2 d = displacement(id, pose, q);
        return {q.u - d.u, q.v - d.v};
    }

    static Vec2 warp_expression(const FaceIdentity& id, const PoseExpressionSample& pose, Vec2 q)
    {
        const Vec2 d = displacement(id, pose, q);
        return {q.u + d.u, q.v + d.v};
    }

    static double sq(double x) { return x * x; }

    /// Striped darkening weight in [0, 1] summed over the three zones.
    static double wrinkle_mask(const FaceIdentity& id, Vec2 q)
    {
        constexpr double two_pi = 6.283185307179586;
        double w = 0.0;
        for (double side : {-1.0, 1.0}) {
            // Outer eye corner: slanted lines fanning away from the eye.
            const double cx = side * (id.eye_half_sep + id.eye_rx), cy = id.eye_y;
            const double wu = q.u - (cx + side * 0.12), wv = q.v - cy;
            const double eye_window = std::exp(-sq(wu / 0.1) - sq(wv / 0.11));
            const double eye_phase = (q.v - cy) * 0.95 + side * (q.u - cx) * 0.3;
            w += eye_window * (0.5 + 0.5 * std::cos(two_pi * eye_phase / kWrinklePeriod));

            // Beside the mouth: near-vertical folds.
            const double mx = side * (id.mouth_hw + 0.08), my = id.mouth_y - 0.05;
            const double mwin = std::exp(-sq((q.u - mx) / 0.07) - sq((q.v - my) / 0.12));
            const double mouth_phase = (q.u - mx) + side * 0.3 * (q.v - my);
            w += mwin * (0.5 + 0.5 * std::cos(two_pi * mouth_phase / kWrinklePeriod));
        }
        return std::min(w, 1.0);
    }

    static std::array<double, 3> shade(const FaceIdentity& id, double strength, Vec2 q)
    {
        const double grey = 0.5 * strength;
        std::array<double, 3> c;
        for (int k = 0; k < 3; ++k) c[k] = id.background[k] + 0.1 * q.v;

        const double fu = q.u / id.face_rx, fv = (q.v - id.face_cy) / id.face_ry;
        const double face_r = fu * fu + fv * fv;
        const bool in_hair = sq(q.u / (id.face_rx + 0.08)) + sq((q.v - id.face_cy + 0.04) / (id.face_ry + 0.1)) < 1.0 &&
                             q.v < id.hairline + 0.05 * std::cos(6.0 * q.u);
        std::array<double, 3> hair;
        for (int k = 0; k < 3; ++k) hair[k] = id.hair[k] * (1.0 - grey) + 0.55 * grey;
        if (in_hair) c = hair;
        if (face_r >= 1.0 || in_hair) return c;

        for (int k = 0; k < 3; ++k) c[k] = (id.skin[k] - 0.06 * strength) * (1.0 - 0.18 * face_r);
        // Nose shading.
        const double nose = std::exp(-sq(q.u / 0.06) - sq((q.v - 0.12) / 0.15));
        for (auto& v : c) v -= 0.1 * nose;

        const double darken = kWrinkleDepth * strength * wrinkle_mask(id, q);
        for (auto& v : c) v -= darken;

        const double brow_y = id.eye_y - id.brow_gap;
        for (double side : {-1.0, 1.0}) {
            const double eu = (q.u - side * id.eye_half_sep) / id.eye_rx, ev = (q.v - id.eye_y) / id.eye_ry;
            if (eu * eu + ev * ev < 1.0) {
                const double iu = (q.u - side * id.eye_half_sep) / (id.eye_ry * 0.9);
                if (iu * iu + ev * ev < 1.0)
                    c = id.iris;
                else
                    c = {0.75, 0.75, 0.72};
            }
            const double bu = (q.u - side * id.eye_half_sep) / (id.eye_rx * 1.3);
            if (std::abs(bu) < 1.0 && std::abs(q.v - brow_y + 0.02 * (1.0 - bu * bu)) < 0.022) c = id.hair;
        }

        const double mu = q.u / id.mouth_hw, mv = (q.v - id.mouth_y) / id.lip_h;
        if (mu * mu + mv * mv < 1.0) {
            c = id.lips;
            if (std::abs(q.v - id.mouth_y) < 0.008) c = {-0.7, -0.8, -0.8};
        }
        return c;
    }
};

} // namespace reage::synth
