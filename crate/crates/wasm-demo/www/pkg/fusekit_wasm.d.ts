/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    histograms(norm: string, bins: number): string;
    inspect(query: string, alpha: number, norm: string): string;
    constructor(seed: number);
    percentile(system: string, score: number): number;
    queries(): string;
    /**
     * `[min, max]` of a system's raw scores.
     */
    scoreRange(system: string): Float64Array;
    sweep(step: number): string;
}

/**
 * Cost model from a JSON object of inputs; absent fields take the defaults.
 */
export function costModel(inputs: string): string;

export function defaultCostInputs(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly costModel: (a: number, b: number) => [number, number, number, number];
    readonly defaultCostInputs: () => [number, number, number, number];
    readonly demo_histograms: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_inspect: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly demo_new: (a: number) => [number, number, number];
    readonly demo_percentile: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_queries: (a: number) => [number, number, number, number];
    readonly demo_scoreRange: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_sweep: (a: number, b: number) => [number, number, number, number];
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
