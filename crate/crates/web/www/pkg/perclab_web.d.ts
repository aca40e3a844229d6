/* tslint:disable */
/* eslint-disable */

/**
 * Closed-form Bethe-lattice results for each p of an evenly spaced grid
 * on `[0, p_max]`.
 */
export function bethe_curves(z: number, p_max: number, points: number, shells: number): string;

/**
 * Samples a `rows x cols` configuration and returns
 * `{"svg", "occupied", "clusters", "largest", "spanning"}`.
 */
export function render_configuration(rows: number, cols: number, p: number, seed: bigint, highlight: string, periodic: boolean): string;

/**
 * Newman-Ziff sweep of a `side^d` lattice: canonical spanning probability,
 * largest-cluster fraction and mean finite size on a p grid, plus the
 * threshold estimate.
 */
export function sweep_curves(d: number, side: number, periodic: boolean, realizations: number, seed: bigint, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bethe_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly render_configuration: (a: number, b: number, c: number, d: bigint, e: number, f: number, g: number) => [number, number, number, number];
    readonly sweep_curves: (a: number, b: number, c: number, d: number, e: bigint, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
