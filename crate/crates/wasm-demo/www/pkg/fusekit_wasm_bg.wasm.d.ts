/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const costModel: (a: number, b: number) => [number, number, number, number];
export const defaultCostInputs: () => [number, number, number, number];
export const demo_histograms: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_inspect: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const demo_new: (a: number) => [number, number, number];
export const demo_percentile: (a: number, b: number, c: number, d: number) => [number, number, number];
export const demo_queries: (a: number) => [number, number, number, number];
export const demo_scoreRange: (a: number, b: number, c: number) => [number, number, number, number];
export const demo_sweep: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
