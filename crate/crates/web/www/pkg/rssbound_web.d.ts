/* tslint:disable */
/* eslint-disable */

/**
 * Circle of `n` anchors (radius 5 m, first anchor on the x-axis). The first
 * `uncertain` anchors counterclockwise carry isotropic position uncertainty
 * `delta`; source at `(x, 0)`.
 */
export function anchor_uncertainty(n: number, uncertain: number, delta: number, x: number, k: number): string;

/**
 * `n` anchors on a circle of radius `d`; source at `(x, y)`.
 */
export function circle_geometry(n: number, d: number, phi1: number, x: number, y: number, k: number): string;

/**
 * Sum or difference of two information ellipses given as `(μ, η, α)`.
 */
export function combine_ellipses(mu1: number, eta1: number, alpha1: number, mu2: number, eta2: number, alpha2: number, subtract: boolean): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly anchor_uncertainty: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly circle_geometry: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly combine_ellipses: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
