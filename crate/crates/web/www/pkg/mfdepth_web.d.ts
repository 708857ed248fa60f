/* tslint:disable */
/* eslint-disable */

export class MaskDemo {
    free(): void;
    [Symbol.dispose](): void;
    masks(co: number, con: number): MaskResult;
    constructor(variant: string);
    overfitPreview(): Uint8Array;
    readonly height: number;
    readonly width: number;
}

export class MaskResult {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly mCo: number;
    readonly mCon: number;
    readonly mI: number;
    readonly movers: number;
    readonly precision: number;
    readonly recall: number;
    readonly rgba: Uint8Array;
}

export class SweepDemo {
    free(): void;
    [Symbol.dispose](): void;
    hintPreview(): Uint8Array;
    image(): Uint8Array;
    constructor(baseline: number);
    /**
     * `[true depth, hint, d_0, c_0, d_1, c_1, …]`; missing values are `NaN`.
     */
    profile(row: number, col: number): Float64Array;
    readonly height: number;
    readonly width: number;
}

export function overfitCurve(camera_speed: number, depth: number, u: number, v: number, speed_min: number, speed_max: number, steps: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_maskdemo_free: (a: number, b: number) => void;
    readonly __wbg_maskresult_free: (a: number, b: number) => void;
    readonly __wbg_sweepdemo_free: (a: number, b: number) => void;
    readonly maskdemo_height: (a: number) => number;
    readonly maskdemo_masks: (a: number, b: number, c: number) => [number, number, number];
    readonly maskdemo_new: (a: number, b: number) => [number, number, number];
    readonly maskdemo_overfitPreview: (a: number) => [number, number, number, number];
    readonly maskdemo_width: (a: number) => number;
    readonly maskresult_mCo: (a: number) => number;
    readonly maskresult_mCon: (a: number) => number;
    readonly maskresult_mI: (a: number) => number;
    readonly maskresult_movers: (a: number) => number;
    readonly maskresult_precision: (a: number) => number;
    readonly maskresult_recall: (a: number) => number;
    readonly maskresult_rgba: (a: number) => [number, number];
    readonly overfitCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly sweepdemo_height: (a: number) => number;
    readonly sweepdemo_hintPreview: (a: number) => [number, number, number, number];
    readonly sweepdemo_image: (a: number) => [number, number];
    readonly sweepdemo_new: (a: number) => [number, number, number];
    readonly sweepdemo_profile: (a: number, b: number, c: number) => [number, number];
    readonly sweepdemo_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
