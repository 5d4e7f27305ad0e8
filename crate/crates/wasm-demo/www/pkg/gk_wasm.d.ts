/* tslint:disable */
/* eslint-disable */

/**
 * Square heatmap handed to JS. `values` is row-major.
 */
export class Heatmap {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly maxAsymmetry: number;
    readonly maxEigenvalue: number;
    readonly minEigenvalue: number;
    readonly size: number;
    readonly valid: boolean;
    readonly values: Float64Array;
}

/**
 * Flat `[λ, value, derivative]` triples for `"relu"` or `"erf"`.
 */
export function activationCurves(activation: string, samples: number): Float64Array;

export function maxGraphs(): number;

export function maxNodes(): number;

export function nodeKernel(kind_name: string, depth: number, edges: string): Heatmap;

export function randomGraphGram(kind_name: string, depth: number, count: number, max_nodes: number, seed: number): Heatmap;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_heatmap_free: (a: number, b: number) => void;
    readonly activationCurves: (a: number, b: number, c: number) => [number, number, number, number];
    readonly heatmap_max_asymmetry: (a: number) => number;
    readonly heatmap_max_eigenvalue: (a: number) => number;
    readonly heatmap_min_eigenvalue: (a: number) => number;
    readonly heatmap_size: (a: number) => number;
    readonly heatmap_valid: (a: number) => number;
    readonly heatmap_values: (a: number) => [number, number];
    readonly maxGraphs: () => number;
    readonly maxNodes: () => number;
    readonly nodeKernel: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly randomGraphGram: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
