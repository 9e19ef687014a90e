/** Small 3D toolkit: vectors, quaternions, the arc-ball mapping, pointer
 * rays, and the orbit camera. Quaternions use [w, x, y, z] order, matching
 * the service's skeleton pose payloads. Matrices are column-major
 * `Float32Array(16)` ready for WebGL uniforms. */

export type Vec3 = readonly [number, number, number];
export type Quat = readonly [number, number, number, number];

export const IDENTITY_QUAT: Quat = [1, 0, 0, 0];

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function scale(v: Vec3, s: number): Vec3 {
  return [v[0] * s, v[1] * s, v[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function length(v: Vec3): number {
  return Math.hypot(v[0], v[1], v[2]);
}

export function normalize(v: Vec3): Vec3 {
  const n = length(v);
  if (n === 0) throw new Error("cannot normalize a zero vector");
  return [v[0] / n, v[1] / n, v[2] / n];
}

export function quatFromAxisAngle(axis: Vec3, radians: number): Quat {
  const u = normalize(axis);
  const h = radians / 2;
  const s = Math.sin(h);
  return [Math.cos(h), u[0] * s, u[1] * s, u[2] * s];
}

export function quatNormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  if (n === 0) throw new Error("cannot normalize a zero quaternion");
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

/** Hamilton product; `quatMultiply(b, a)` applies `a` first, then `b`. */
export function quatMultiply(b: Quat, a: Quat): Quat {
  const [bw, bx, by, bz] = b;
  const [aw, ax, ay, az] = a;
  return [
    bw * aw - bx * ax - by * ay - bz * az,
    bw * ax + bx * aw + by * az - bz * ay,
    bw * ay - bx * az + by * aw + bz * ax,
    bw * az + bx * ay - by * ax + bz * aw,
  ];
}

export function rotateByQuat(q: Quat, v: Vec3): Vec3 {
  const u: Vec3 = [q[1], q[2], q[3]];
  const s = q[0];
  const uv = cross(u, v);
  const uuv = cross(u, uv);
  return add(v, add(scale(uv, 2 * s), scale(uuv, 2)));
}

/** Map a pointer position in the gizmo's unit square onto the arc-ball.
 *
 * Inside radius/√2 the point lifts onto the sphere; outside it follows the
 * hyperbolic sheet so the mapping stays continuous however far the pointer
 * strays. Returns a point on or near the unit ball (unnormalized). */
export function arcballPoint(x: number, y: number, radius = 1): Vec3 {
  const r2 = radius * radius;
  const d2 = x * x + y * y;
  if (d2 <= r2 / 2) return [x, y, Math.sqrt(r2 - d2)];
  return [x, y, r2 / 2 / Math.sqrt(d2)];
}

/** Rotation for a drag from one pointer position to another.
 *
 * Both positions lift onto the ball; the result turns by twice the angle
 * between the lifted points (a drag across the whole ball spins a full
 * turn). A zero-length drag is the identity. */
export function arcballRotation(
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  radius = 1,
): Quat {
  if (x0 === x1 && y0 === y1) return IDENTITY_QUAT;
  const a = normalize(arcballPoint(x0, y0, radius));
  const b = normalize(arcballPoint(x1, y1, radius));
  const axis = cross(a, b);
  const raw: Quat = [dot(a, b), axis[0], axis[1], axis[2]];
  if (Math.hypot(raw[0], raw[1], raw[2], raw[3]) < 1e-12) return IDENTITY_QUAT;
  return quatNormalize(raw);
}

export interface CameraState {
  readonly eye: Vec3;
  readonly lookAt: Vec3;
  readonly up: Vec3;
  readonly verticalFovDeg: number;
  readonly width: number;
  readonly height: number;
}

/** The service's stock camera: 3 units back on +z, 45° fov, 512×384. */
export function defaultCamera(width = 512, height = 384): CameraState {
  return {
    eye: [0, 0, 3],
    lookAt: [0, 0, 0],
    up: [0, 1, 0],
    verticalFovDeg: 45,
    width,
    height,
  };
}

export interface OrbitState {
  readonly target: Vec3;
  readonly distance: number;
  /** Radians around +y; 0 puts the eye on the +z side of the target. */
  readonly azimuth: number;
  /** Radians above the horizon; clamped short of the poles. */
  readonly elevation: number;
}

export function defaultOrbit(): OrbitState {
  return { target: [0, 0, 0], distance: 3, azimuth: 0, elevation: 0 };
}

const MAX_ELEVATION = Math.PI / 2 - 1e-3;

export function orbitBy(
  orbit: OrbitState,
  dAzimuth: number,
  dElevation: number,
): OrbitState {
  const elevation = Math.min(
    MAX_ELEVATION,
    Math.max(-MAX_ELEVATION, orbit.elevation + dElevation),
  );
  return { ...orbit, azimuth: orbit.azimuth + dAzimuth, elevation };
}

export function zoomBy(orbit: OrbitState, factor: number): OrbitState {
  return { ...orbit, distance: Math.max(1e-3, orbit.distance * factor) };
}

export function cameraFromOrbit(
  orbit: OrbitState,
  width: number,
  height: number,
): CameraState {
  const ce = Math.cos(orbit.elevation);
  const eye = add(orbit.target, [
    orbit.distance * Math.sin(orbit.azimuth) * ce,
    orbit.distance * Math.sin(orbit.elevation),
    orbit.distance * Math.cos(orbit.azimuth) * ce,
  ]);
  return {
    eye,
    lookAt: orbit.target,
    up: [0, 1, 0],
    verticalFovDeg: 45,
    width,
    height,
  };
}

export interface CameraBasis {
  readonly forward: Vec3;
  readonly right: Vec3;
  readonly up: Vec3;
}

export function cameraBasis(camera: CameraState): CameraBasis {
  const forward = normalize(sub(camera.lookAt, camera.eye));
  const right = normalize(cross(forward, camera.up));
  const up = cross(right, forward);
  return { forward, right, up };
}

export interface Ray {
  readonly origin: Vec3;
  readonly dir: Vec3;
}

/** World-space ray through a pixel center ((0,0) is the top-left pixel). */
export function pixelRay(camera: CameraState, px: number, py: number): Ray {
  const { forward, right, up } = cameraBasis(camera);
  const tanHalf = Math.tan((camera.verticalFovDeg * Math.PI) / 360);
  const aspect = camera.width / camera.height;
  const fx = ((2 * (px + 0.5)) / camera.width - 1) * tanHalf * aspect;
  const fy = (1 - (2 * (py + 0.5)) / camera.height) * tanHalf;
  const dir = normalize(
    add(forward, add(scale(right, fx), scale(up, fy))),
  );
  return { origin: camera.eye, dir };
}

/** Ray/plane hit point, or null when parallel or behind the origin. */
export function intersectPlane(
  ray: Ray,
  planePoint: Vec3,
  planeNormal: Vec3,
): Vec3 | null {
  const denom = dot(ray.dir, planeNormal);
  if (Math.abs(denom) < 1e-12) return null;
  const t = dot(sub(planePoint, ray.origin), planeNormal) / denom;
  if (t <= 0) return null;
  return add(ray.origin, scale(ray.dir, t));
}

/** Where a pointer lands on the view-perpendicular plane through `anchor`.
 *
 * This is the handle/cage drag mapping: the plane faces the camera and
 * passes through the grabbed point, so screen motion translates 1:1 into
 * world motion at the anchor's depth. */
export function dragPlaneTarget(
  camera: CameraState,
  anchor: Vec3,
  px: number,
  py: number,
): Vec3 | null {
  const { forward } = cameraBasis(camera);
  return intersectPlane(pixelRay(camera, px, py), anchor, forward);
}

/** Pixel position of a world point, or null when behind the camera. */
export function projectToPixel(
  camera: CameraState,
  point: Vec3,
): readonly [number, number] | null {
  const { forward, right, up } = cameraBasis(camera);
  const rel = sub(point, camera.eye);
  const z = dot(rel, forward);
  if (z <= 0) return null;
  const tanHalf = Math.tan((camera.verticalFovDeg * Math.PI) / 360);
  const aspect = camera.width / camera.height;
  const fx = dot(rel, right) / (z * tanHalf * aspect);
  const fy = dot(rel, up) / (z * tanHalf);
  return [((fx + 1) / 2) * camera.width - 0.5, ((1 - fy) / 2) * camera.height - 0.5];
}

export function viewMatrix(camera: CameraState): Float32Array {
  const { forward, right, up } = cameraBasis(camera);
  const e = camera.eye;
  // rows are the camera axes; translation brings the eye to the origin
  return new Float32Array([
    right[0], up[0], -forward[0], 0,
    right[1], up[1], -forward[1], 0,
    right[2], up[2], -forward[2], 0,
    -dot(right, e), -dot(up, e), dot(forward, e), 1,
  ]);
}

export function projectionMatrix(
  camera: CameraState,
  near = 0.05,
  far = 100,
): Float32Array {
  const f = 1 / Math.tan((camera.verticalFovDeg * Math.PI) / 360);
  const aspect = camera.width / camera.height;
  const nf = 1 / (near - far);
  return new Float32Array([
    f / aspect, 0, 0, 0,
    0, f, 0, 0,
    0, 0, (far + near) * nf, -1,
    0, 0, 2 * far * near * nf, 0,
  ]);
}

export function multiplyMat4(a: Float32Array, b: Float32Array): Float32Array {
  const out = new Float32Array(16);
  for (let col = 0; col < 4; col++) {
    for (let row = 0; row < 4; row++) {
      let sum = 0;
      for (let k = 0; k < 4; k++) sum += a[k * 4 + row] * b[col * 4 + k];
      out[col * 4 + row] = sum;
    }
  }
  return out;
}
