/** Client-side tree layout for the feeder, rooted at the grid tie.
 *
 * The service is presentation-free, so node positions are derived here: depth
 * below the root fixes the y coordinate, and leaves are spread left to right
 * with each parent centered over its children.
 */

import { Topology } from "./api.js";

export interface Point {
    x: number;
    y: number;
}

export interface Layout {
    positions: Map<number, Point>;
    width: number;
    height: number;
}

const X_STEP = 90;
const Y_STEP = 80;
const MARGIN = 50;

export function treeLayout(top: Topology): Layout {
    const root = top.buses.find((b) => b.grid_tie)?.id ?? top.buses[0]?.id;
    const adjacency = new Map<number, number[]>();
    for (const bus of top.buses) adjacency.set(bus.id, []);
    for (const br of [...top.branches].sort((a, b) => a.id - b.id)) {
        adjacency.get(br.from)?.push(br.to);
        adjacency.get(br.to)?.push(br.from);
    }

    const depth = new Map<number, number>();
    const children = new Map<number, number[]>();
    const order: number[] = [];
    const queue: number[] = root === undefined ? [] : [root];
    if (root !== undefined) depth.set(root, 0);
    while (queue.length > 0) {
        const bus = queue.shift()!;
        order.push(bus);
        const kids: number[] = [];
        for (const next of adjacency.get(bus) ?? []) {
            if (!depth.has(next)) {
                depth.set(next, depth.get(bus)! + 1);
                kids.push(next);
                queue.push(next);
            }
        }
        children.set(bus, kids);
    }

    // Post-order x: leaves take the next free column, parents center over
    // their children. Any bus the BFS never reached (disconnected input)
    // falls back to its own column.
    const x = new Map<number, number>();
    let nextColumn = 0;
    const place = (bus: number): number => {
        const kids = children.get(bus) ?? [];
        if (kids.length === 0) {
            x.set(bus, nextColumn);
            return nextColumn++;
        }
        const cols = kids.map(place);
        const center = (cols[0] + cols[cols.length - 1]) / 2;
        x.set(bus, center);
        return center;
    };
    if (root !== undefined) place(root);
    for (const bus of top.buses) {
        if (!x.has(bus.id)) {
            x.set(bus.id, nextColumn++);
            depth.set(bus.id, 0);
        }
    }

    const positions = new Map<number, Point>();
    let maxX = 0;
    let maxY = 0;
    for (const bus of top.buses) {
        const px = MARGIN + x.get(bus.id)! * X_STEP;
        const py = MARGIN + depth.get(bus.id)! * Y_STEP;
        positions.set(bus.id, { x: px, y: py });
        maxX = Math.max(maxX, px);
        maxY = Math.max(maxY, py);
    }
    return { positions, width: maxX + MARGIN, height: maxY + MARGIN };
}
