/**
 * Connector geometry: vector curves between block midpoints.
 *
 * All coordinates are in the shared overlay space (the SVG that sits
 * between the panes). A link with several blocks per side is drawn from
 * the midpoint of the bounding box of its blocks, so M:N links get one
 * curve, not a lattice.
 */

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface Point {
  x: number;
  y: number;
}

export function boundingRect(rects: Rect[]): Rect {
  if (rects.length === 0) {
    throw new Error("boundingRect of zero rects");
  }
  let left = Infinity;
  let top = Infinity;
  let right = -Infinity;
  let bottom = -Infinity;
  for (const r of rects) {
    left = Math.min(left, r.x);
    top = Math.min(top, r.y);
    right = Math.max(right, r.x + r.width);
    bottom = Math.max(bottom, r.y + r.height);
  }
  return { x: left, y: top, width: right - left, height: bottom - top };
}

export function edgeMidpoint(rect: Rect, side: "left" | "right"): Point {
  return {
    x: side === "left" ? rect.x : rect.x + rect.width,
    y: rect.y + rect.height / 2,
  };
}

function fmt(value: number): string {
  // One decimal keeps paths short and stable across float noise.
  return (Math.round(value * 10) / 10).toString();
}

/**
 * Cubic curve from the facing edge of `from` to the facing edge of `to`.
 * Control points pull horizontally so the curve leaves and enters flat.
 */
export function connectorPath(from: Rect, to: Rect, bend = 0.4): string {
  const leftToRight = from.x + from.width / 2 <= to.x + to.width / 2;
  const start = edgeMidpoint(from, leftToRight ? "right" : "left");
  const end = edgeMidpoint(to, leftToRight ? "left" : "right");
  const pull = Math.max(Math.abs(end.x - start.x) * bend, 12);
  const c1x = leftToRight ? start.x + pull : start.x - pull;
  const c2x = leftToRight ? end.x - pull : end.x + pull;
  return (
    `M ${fmt(start.x)} ${fmt(start.y)} ` +
    `C ${fmt(c1x)} ${fmt(start.y)}, ${fmt(c2x)} ${fmt(end.y)}, ` +
    `${fmt(end.x)} ${fmt(end.y)}`
  );
}

/**
 * Marker for a null link: a short stub out of the linked block ending in
 * a terminal bar, on the side facing the other pane.
 */
export function nullMarkerPath(
  rect: Rect,
  side: "left" | "right",
  stub = 18,
): string {
  const tip = edgeMidpoint(rect, side);
  const dx = side === "right" ? stub : -stub;
  const endX = tip.x + dx;
  const bar = 5;
  return (
    `M ${fmt(tip.x)} ${fmt(tip.y)} L ${fmt(endX)} ${fmt(tip.y)} ` +
    `M ${fmt(endX)} ${fmt(tip.y - bar)} L ${fmt(endX)} ${fmt(tip.y + bar)}`
  );
}

/** CSS classes for a connector, styled by origin and cardinality. */
export function connectorClass(spec: {
  origin: string;
  cardinality: string;
  pending: boolean;
  selected: boolean;
}): string {
  const parts = [
    "connector",
    `origin-${spec.origin}`,
    `card-${spec.cardinality.replace(":", "-").toLowerCase()}`,
  ];
  if (spec.pending) parts.push("pending");
  if (spec.selected) parts.push("selected");
  return parts.join(" ");
}
