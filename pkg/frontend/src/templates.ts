/** Pseudo-letter templates composed from three concatenable trace atoms.
 *
 * The original study glyphs are not published; these are visually similar
 * stand-ins (every template carries `original: false`). Atoms join with C0
 * continuity and the result is resampled to uniform arc length in screen
 * pixels.
 */

export type Point = [number, number];

export interface TraceAtom {
  id: string;
  /** Polyline in atom-local units, starting at [0, 0]. */
  points: Point[];
}

export interface Template {
  id: string;
  points: Point[];
  atomIds: [string, string, string];
  original: false;
}

function sampled(n: number, f: (s: number) => Point): Point[] {
  const pts: Point[] = [];
  for (let i = 0; i < n; i++) {
    const [x, y] = f(i / (n - 1));
    pts.push([x + 0, y + 0]);  // normalize -0
  }
  return pts;
}

/** Descending hook, double wave, closing loop: the three stroke atoms. */
export const TRACE_ATOMS: TraceAtom[] = [
  {
    id: "hook",
    points: sampled(60, (s) => [60 * Math.sin(Math.PI * s), 220 * s]),
  },
  {
    id: "wave",
    points: sampled(60, (s) => [240 * s, 55 * Math.sin(2.5 * Math.PI * s)]),
  },
  {
    id: "loop",
    points: sampled(60, (s) => {
      const phi = 1.75 * 2 * Math.PI * s;
      return [(80 * (1 - Math.cos(phi))) / 2 + 90 * s, -70 * Math.sin(phi) - 140 * s];
    }),
  },
];

const ATOM_BY_ID = new Map(TRACE_ATOMS.map((a) => [a.id, a]));

function arcLengths(points: Point[]): number[] {
  const arc = [0];
  for (let i = 1; i < points.length; i++) {
    const dx = points[i][0] - points[i - 1][0];
    const dy = points[i][1] - points[i - 1][1];
    arc.push(arc[i - 1] + Math.hypot(dx, dy));
  }
  return arc;
}

function resampleUniform(points: Point[], count: number): Point[] {
  const arc = arcLengths(points);
  const total = arc[arc.length - 1];
  const out: Point[] = [];
  let seg = 0;
  for (let i = 0; i < count; i++) {
    const target = (total * i) / (count - 1);
    while (seg < arc.length - 2 && arc[seg + 1] < target) seg++;
    const span = arc[seg + 1] - arc[seg];
    const u = span > 0 ? (target - arc[seg]) / span : 0;
    out.push([
      points[seg][0] + u * (points[seg + 1][0] - points[seg][0]),
      points[seg][1] + u * (points[seg + 1][1] - points[seg][1]),
    ]);
  }
  return out;
}

export interface ComposeOptions {
  scale?: number;
  offsetX?: number;
  offsetY?: number;
  pointCount?: number;
}

export function composeTemplate(
  atomIds: [string, string, string],
  opts: ComposeOptions = {},
): Template {
  const { scale = 2.2, offsetX = 240, offsetY = 760, pointCount = 162 } = opts;
  const joined: Point[] = [];
  let cursor: Point = [0, 0];
  for (const id of atomIds) {
    const atom = ATOM_BY_ID.get(id);
    if (!atom) throw new Error(`unknown trace atom '${id}'`);
    const base = joined.length ? atom.points.slice(1) : atom.points;
    const origin = atom.points[0];
    for (const [x, y] of base) {
      joined.push([x - origin[0] + cursor[0], y - origin[1] + cursor[1]]);
    }
    cursor = joined[joined.length - 1];
  }
  // y flips so the glyph is drawn downward in screen coordinates
  const placed: Point[] = joined.map(([x, y]) => [
    scale * x + offsetX,
    -scale * y + offsetY,
  ]);
  return {
    id: atomIds.join("-"),
    points: resampleUniform(placed, pointCount),
    atomIds,
    original: false,
  };
}

export const DEFAULT_TEMPLATES: Template[] = [
  composeTemplate(["hook", "wave", "loop"]),
  composeTemplate(["wave", "hook", "loop"]),
  composeTemplate(["loop", "wave", "hook"]),
];

export function templateArcLength(template: Template): number {
  const arc = arcLengths(template.points);
  return arc[arc.length - 1];
}
