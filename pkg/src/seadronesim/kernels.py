"""Numba path-tracing kernels.

Transport model: pinhole camera above an infinite water plane (z = 0) with a
Fresnel reflect/refract interface, a homogeneous absorbing/scattering medium
filling z in (-depth, 0), a checkerboard Lambertian seafloor at z = -depth,
triangle meshes (object of interest + distractors) shaded as Lambertian, a
directional sun sampled by next-event estimation, and a constant environment
radiance for escaping rays.

Scattering events are sampled against the max channel of sigma_s with the
absorption part of the closed-form transmittance applied analytically, which
is exact for a homogeneous slab and keeps pure-absorption scenes noise-free.
Shadow rays to the sun cross the water surface without refraction bend and
are attenuated by the closed-form transmittance and the boundary's Fresnel
transmission.

Randomness is a counter-based hash of (seed, frame, pixel, sample, draw
index), so every pixel owns an RNG stream independent of scheduling: any
tiling or worker count reproduces identical images bit for bit.
"""

from __future__ import annotations

import numba
import numpy as np

from .bvh import STACK_DEPTH, bvh_any_hit, bvh_closest_hit

# hit kinds
_NONE = 0
_TRI = 1
_FLOOR = 2
_SURF = 3

_OFF = 1e-6          # ray origin offset off surfaces, meters
_PLANE_EPS = 1e-9
_WATER_IOR = 1.33
_MAX_SPEC_EXTRA = 8  # specular interface events allowed beyond max_bounces

_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_C_SEED = np.uint64(0xA0761D6478BD642F)
_C_FRAME = np.uint64(0xE7037ED1A0B428DB)
_C_PIXEL = np.uint64(0x8EBC6AF09C88C6E3)
_C_SAMPLE = np.uint64(0x589965CC75374CC3)
_C_DIM = np.uint64(0x9E3779B97F4A7C15)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@numba.njit(nogil=True, cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> _U30)) * _M1
    z = (z ^ (z >> _U27)) * _M2
    return z ^ (z >> _U31)


@numba.njit(nogil=True, cache=True, inline="always")
def _stream(seed, frame, pixel, sample):
    z = _mix(seed ^ _C_SEED)
    z = _mix(z ^ frame * _C_FRAME)
    z = _mix(z ^ pixel * _C_PIXEL)
    return _mix(z ^ sample * _C_SAMPLE)


@numba.njit(nogil=True, cache=True, inline="always")
def _rand(base, dim):
    """Uniform in [0, 1); returns (value, next dim)."""
    u = _mix(base ^ dim * _C_DIM)
    return (u >> _U11) * _INV53, dim + np.uint64(1)


@numba.njit(nogil=True, cache=True, inline="always")
def _fresnel_reflectance(cos_i, eta_i, eta_t):
    """Unpolarized dielectric reflectance; 1.0 on total internal reflection."""
    sin2_t = (eta_i / eta_t) * (eta_i / eta_t) * (1.0 - cos_i * cos_i)
    if sin2_t >= 1.0:
        return 1.0
    cos_t = np.sqrt(1.0 - sin2_t)
    r_par = (eta_t * cos_i - eta_i * cos_t) / (eta_t * cos_i + eta_i * cos_t)
    r_perp = (eta_i * cos_i - eta_t * cos_t) / (eta_i * cos_i + eta_t * cos_t)
    return 0.5 * (r_par * r_par + r_perp * r_perp)


@numba.njit(nogil=True, cache=True, inline="always")
def _hg_phase(cos_theta, g):
    denom = 1.0 + g * g - 2.0 * g * cos_theta
    if denom < 1e-12:
        denom = 1e-12
    return (1.0 - g * g) / (4.0 * np.pi * denom * np.sqrt(denom))


@numba.njit(nogil=True, cache=True, inline="always")
def _onb(nx, ny, nz):
    """Orthonormal tangent/bitangent for unit normal n."""
    if abs(nz) < 0.999:
        tx, ty, tz = -ny, nx, 0.0  # cross((0,0,1), n)
    else:
        tx, ty, tz = 0.0, nz, -ny  # cross((1,0,0), n)
    inv = 1.0 / np.sqrt(tx * tx + ty * ty + tz * tz)
    tx, ty, tz = tx * inv, ty * inv, tz * inv
    bx = ny * tz - nz * ty
    by = nz * tx - nx * tz
    bz = nx * ty - ny * tx
    return tx, ty, tz, bx, by, bz


@numba.njit(nogil=True, cache=True, inline="always")
def _wave_normal(x, y, wave):
    a1 = wave[0]
    if a1 <= 0.0:
        return 0.0, 0.0, 1.0
    arg1 = wave[1] * x + wave[2] * y + wave[3]
    arg2 = wave[5] * x + wave[6] * y + wave[7]
    dhx = a1 * wave[1] * np.cos(arg1) + wave[4] * wave[5] * np.cos(arg2)
    dhy = a1 * wave[2] * np.cos(arg1) + wave[4] * wave[6] * np.cos(arg2)
    inv = 1.0 / np.sqrt(dhx * dhx + dhy * dhy + 1.0)
    return -dhx * inv, -dhy * inv, inv


@numba.njit(nogil=True, cache=True, inline="always")
def _checker(x, y, tile, floor_a, floor_b, c):
    ix = int(np.floor(x / tile))
    iy = int(np.floor(y / tile))
    if (ix + iy) & 1 == 0:
        return floor_a[c]
    return floor_b[c]


@numba.njit(nogil=True, cache=True)
def _sun_visible(px, py, pz, sdx, sdy, sdz,
                 node_min, node_max, node_left, node_count,
                 tri_v0, tri_e1, tri_e2, stack):
    return not bvh_any_hit(px, py, pz, sdx, sdy, sdz, np.inf,
                           node_min, node_max, node_left, node_count,
                           tri_v0, tri_e1, tri_e2, stack)


@numba.njit(nogil=True, cache=True)
def render_tile(out, x0, x1, y0, y1,
                spp, max_bounces, seed, frame,
                cam_pos, cam_right, cam_up, cam_fwd, tan_hfov, tan_vfov, width, height,
                node_min, node_max, node_left, node_count,
                tri_v0, tri_e1, tri_e2, tri_normal, tri_mat, tri_inst, mat_albedo,
                has_water, depth, sig_a, sig_s, sig_t, sig_smaj, hg_g, wave,
                has_floor, floor_a, floor_b, floor_tile,
                sun_dir, sun_irr, sky):
    stack = np.empty(STACK_DEPTH, dtype=np.int32)
    z_floor = -depth
    sun_above_cross = _fresnel_reflectance(sun_dir[2], 1.0, _WATER_IOR)
    sun_trans = 1.0 - sun_above_cross  # Fresnel transmission for sun shadow rays

    for py in range(y0, y1):
        for px in range(x0, x1):
            pixel = np.uint64(py * width + px)
            acc_r = 0.0
            acc_g = 0.0
            acc_b = 0.0
            for s in range(spp):
                base = _stream(seed, frame, pixel, np.uint64(s))
                dim = np.uint64(0)
                u1, dim = _rand(base, dim)
                u2, dim = _rand(base, dim)
                cx = tan_hfov * (2.0 * (px + u1) / width - 1.0)
                cy = tan_vfov * (1.0 - 2.0 * (py + u2) / height)
                dx = cam_fwd[0] + cx * cam_right[0] + cy * cam_up[0]
                dy = cam_fwd[1] + cx * cam_right[1] + cy * cam_up[1]
                dz = cam_fwd[2] + cx * cam_right[2] + cy * cam_up[2]
                inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
                dx, dy, dz = dx * inv, dy * inv, dz * inv
                ox, oy, oz = cam_pos[0], cam_pos[1], cam_pos[2]

                lr = 0.0
                lg = 0.0
                lb = 0.0
                tr = 1.0
                tg = 1.0
                tb = 1.0
                bounces = 0
                spec_events = 0

                while True:
                    t_hit, tri = bvh_closest_hit(ox, oy, oz, dx, dy, dz, np.inf,
                                                 node_min, node_max, node_left,
                                                 node_count, tri_v0, tri_e1, tri_e2,
                                                 stack)
                    kind = _TRI if tri >= 0 else _NONE
                    if has_floor and dz != 0.0:
                        t_f = (z_floor - oz) / dz
                        if _PLANE_EPS < t_f < t_hit:
                            t_hit = t_f
                            kind = _FLOOR
                    if has_water and dz != 0.0:
                        t_s = -oz / dz
                        if _PLANE_EPS < t_s < t_hit:
                            t_hit = t_s
                            kind = _SURF

                    # homogeneous medium: possible scatter event on this segment
                    inside = has_water and (z_floor < oz < 0.0)
                    scattered = False
                    if inside:
                        if kind == _NONE:
                            break  # endless in-slab segment carries no light
                        seg = t_hit
                        d_s = np.inf
                        if sig_smaj > 0.0:
                            u, dim = _rand(base, dim)
                            d_s = -np.log(1.0 - u) / sig_smaj
                        if d_s < seg:
                            # scatter at d_s; absorption handled analytically
                            tr *= (sig_s[0] / sig_smaj) * np.exp(-(sig_t[0] - sig_smaj) * d_s)
                            tg *= (sig_s[1] / sig_smaj) * np.exp(-(sig_t[1] - sig_smaj) * d_s)
                            tb *= (sig_s[2] / sig_smaj) * np.exp(-(sig_t[2] - sig_smaj) * d_s)
                            if tr <= 0.0 and tg <= 0.0 and tb <= 0.0:
                                break
                            sx_ = ox + dx * d_s
                            sy_ = oy + dy * d_s
                            sz_ = oz + dz * d_s
                            bounces += 1
                            if tr > 0.0 or tg > 0.0 or tb > 0.0:
                                cos_sun = dx * sun_dir[0] + dy * sun_dir[1] + dz * sun_dir[2]
                                ph = _hg_phase(cos_sun, hg_g)
                                if _sun_visible(sx_, sy_, sz_, sun_dir[0], sun_dir[1],
                                                sun_dir[2], node_min, node_max, node_left,
                                                node_count, tri_v0, tri_e1, tri_e2, stack):
                                    wlen = -sz_ / sun_dir[2]
                                    lr += tr * ph * sun_irr[0] * np.exp(-sig_t[0] * wlen) * sun_trans
                                    lg += tg * ph * sun_irr[1] * np.exp(-sig_t[1] * wlen) * sun_trans
                                    lb += tb * ph * sun_irr[2] * np.exp(-sig_t[2] * wlen) * sun_trans
                            if bounces >= max_bounces:
                                break
                            # sample Henyey-Greenstein direction about d
                            u1, dim = _rand(base, dim)
                            u2, dim = _rand(base, dim)
                            if abs(hg_g) < 1e-3:
                                ct = 1.0 - 2.0 * u1
                            else:
                                sq = (1.0 - hg_g * hg_g) / (1.0 - hg_g + 2.0 * hg_g * u1)
                                ct = (1.0 + hg_g * hg_g - sq * sq) / (2.0 * hg_g)
                            st = np.sqrt(max(0.0, 1.0 - ct * ct))
                            phi = 2.0 * np.pi * u2
                            txx, txy, txz, bxx, bxy, bxz = _onb(dx, dy, dz)
                            ndx = st * np.cos(phi) * txx + st * np.sin(phi) * bxx + ct * dx
                            ndy = st * np.cos(phi) * txy + st * np.sin(phi) * bxy + ct * dy
                            ndz = st * np.cos(phi) * txz + st * np.sin(phi) * bxz + ct * dz
                            inv = 1.0 / np.sqrt(ndx * ndx + ndy * ndy + ndz * ndz)
                            ox, oy, oz = sx_, sy_, sz_
                            dx, dy, dz = ndx * inv, ndy * inv, ndz * inv
                            scattered = True
                        else:
                            # no scatter event: carry closed-form transmittance
                            tr *= np.exp(-(sig_t[0] - sig_smaj) * seg)
                            tg *= np.exp(-(sig_t[1] - sig_smaj) * seg)
                            tb *= np.exp(-(sig_t[2] - sig_smaj) * seg)
                    if scattered:
                        continue

                    if kind == _NONE:
                        lr += tr * sky[0]
                        lg += tg * sky[1]
                        lb += tb * sky[2]
                        break

                    hx = ox + dx * t_hit
                    hy = oy + dy * t_hit
                    hz = oz + dz * t_hit

                    if kind == _SURF:
                        spec_events += 1
                        if spec_events > max_bounces + _MAX_SPEC_EXTRA:
                            break
                        from_above = oz > 0.0
                        nx, ny, nz = _wave_normal(hx, hy, wave)
                        if not from_above:
                            nx, ny, nz = -nx, -ny, -nz
                        cos_i = -(dx * nx + dy * ny + dz * nz)
                        if cos_i <= 0.0:
                            # wave normal faces away; fall back to the flat normal
                            nx, ny = 0.0, 0.0
                            nz = 1.0 if from_above else -1.0
                            cos_i = -(dz * nz)
                            if cos_i <= 0.0:
                                break  # numerically degenerate grazing ray
                        if from_above:
                            eta_i, eta_t = 1.0, _WATER_IOR
                        else:
                            eta_i, eta_t = _WATER_IOR, 1.0
                        refl = _fresnel_reflectance(cos_i, eta_i, eta_t)
                        u, dim = _rand(base, dim)
                        if u < refl:
                            dx = dx + 2.0 * cos_i * nx
                            dy = dy + 2.0 * cos_i * ny
                            dz = dz + 2.0 * cos_i * nz
                            oz_off = _OFF if from_above else -_OFF
                        else:
                            eta = eta_i / eta_t
                            cos_t = np.sqrt(max(0.0, 1.0 - eta * eta * (1.0 - cos_i * cos_i)))
                            dx = eta * dx + (eta * cos_i - cos_t) * nx
                            dy = eta * dy + (eta * cos_i - cos_t) * ny
                            dz = eta * dz + (eta * cos_i - cos_t) * nz
                            oz_off = -_OFF if from_above else _OFF
                        inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
                        dx, dy, dz = dx * inv, dy * inv, dz * inv
                        ox, oy, oz = hx, hy, oz_off
                        continue

                    # Lambertian surface (floor plane or mesh triangle)
                    if kind == _FLOOR:
                        nx, ny, nz = 0.0, 0.0, 1.0
                        alb_r = _checker(hx, hy, floor_tile, floor_a, floor_b, 0)
                        alb_g = _checker(hx, hy, floor_tile, floor_a, floor_b, 1)
                        alb_b = _checker(hx, hy, floor_tile, floor_a, floor_b, 2)
                    else:
                        nx = tri_normal[tri, 0]
                        ny = tri_normal[tri, 1]
                        nz = tri_normal[tri, 2]
                        if dx * nx + dy * ny + dz * nz > 0.0:
                            nx, ny, nz = -nx, -ny, -nz
                        m = tri_mat[tri]
                        alb_r = mat_albedo[m, 0]
                        alb_g = mat_albedo[m, 1]
                        alb_b = mat_albedo[m, 2]

                    bounces += 1
                    sox = hx + nx * _OFF
                    soy = hy + ny * _OFF
                    soz = hz + nz * _OFF
                    cos_l = nx * sun_dir[0] + ny * sun_dir[1] + nz * sun_dir[2]
                    if cos_l > 0.0 and _sun_visible(sox, soy, soz, sun_dir[0], sun_dir[1],
                                                    sun_dir[2], node_min, node_max,
                                                    node_left, node_count,
                                                    tri_v0, tri_e1, tri_e2, stack):
                        wlen = 0.0
                        cross = 1.0
                        if has_water and soz < 0.0:
                            wlen = -soz / sun_dir[2]
                            cross = sun_trans
                        f = cos_l / np.pi * cross
                        lr += tr * alb_r * f * sun_irr[0] * np.exp(-sig_t[0] * wlen)
                        lg += tg * alb_g * f * sun_irr[1] * np.exp(-sig_t[1] * wlen)
                        lb += tb * alb_b * f * sun_irr[2] * np.exp(-sig_t[2] * wlen)
                    if bounces >= max_bounces:
                        break
                    u1, dim = _rand(base, dim)
                    u2, dim = _rand(base, dim)
                    r_ = np.sqrt(u1)
                    phi = 2.0 * np.pi * u2
                    lx = r_ * np.cos(phi)
                    ly = r_ * np.sin(phi)
                    lz = np.sqrt(max(0.0, 1.0 - u1))
                    txx, txy, txz, bxx, bxy, bxz = _onb(nx, ny, nz)
                    dx = lx * txx + ly * bxx + lz * nx
                    dy = lx * txy + ly * bxy + lz * ny
                    dz = lx * txz + ly * bxz + lz * nz
                    inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
                    dx, dy, dz = dx * inv, dy * inv, dz * inv
                    tr *= alb_r
                    tg *= alb_g
                    tb *= alb_b
                    ox, oy, oz = sox, soy, soz

                acc_r += lr
                acc_g += lg
                acc_b += lb

            out[py, px, 0] = acc_r / spp
            out[py, px, 1] = acc_g / spp
            out[py, px, 2] = acc_b / spp


@numba.njit(nogil=True, cache=True)
def id_tile(mask, x0, x1, y0, y1,
            cam_pos, cam_right, cam_up, cam_fwd, tan_hfov, tan_vfov, width, height,
            node_min, node_max, node_left, node_count,
            tri_v0, tri_e1, tri_e2, tri_inst, object_inst,
            has_floor, depth):
    """Primary-visibility object-id pass: one centered ray per pixel, water
    surface skipped entirely (treated as transparent, no refraction bend)."""
    stack = np.empty(STACK_DEPTH, dtype=np.int32)
    z_floor = -depth
    for py in range(y0, y1):
        for px in range(x0, x1):
            cx = tan_hfov * (2.0 * (px + 0.5) / width - 1.0)
            cy = tan_vfov * (1.0 - 2.0 * (py + 0.5) / height)
            dx = cam_fwd[0] + cx * cam_right[0] + cy * cam_up[0]
            dy = cam_fwd[1] + cx * cam_right[1] + cy * cam_up[1]
            dz = cam_fwd[2] + cx * cam_right[2] + cy * cam_up[2]
            inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
            dx, dy, dz = dx * inv, dy * inv, dz * inv
            t_hit, tri = bvh_closest_hit(cam_pos[0], cam_pos[1], cam_pos[2],
                                         dx, dy, dz, np.inf,
                                         node_min, node_max, node_left, node_count,
                                         tri_v0, tri_e1, tri_e2, stack)
            hit_obj = tri >= 0 and tri_inst[tri] == object_inst
            if hit_obj and has_floor and dz != 0.0:
                t_f = (z_floor - cam_pos[2]) / dz
                if _PLANE_EPS < t_f < t_hit:
                    hit_obj = False
            mask[py, px] = hit_obj
