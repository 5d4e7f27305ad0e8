/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_heatmap_free: (a: number, b: number) => void;
export const activationCurves: (a: number, b: number, c: number) => [number, number, number, number];
export const heatmap_max_asymmetry: (a: number) => number;
export const heatmap_max_eigenvalue: (a: number) => number;
export const heatmap_min_eigenvalue: (a: number) => number;
export const heatmap_size: (a: number) => number;
export const heatmap_valid: (a: number) => number;
export const heatmap_values: (a: number) => [number, number];
export const maxGraphs: () => number;
export const maxNodes: () => number;
export const nodeKernel: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const randomGraphGram: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
