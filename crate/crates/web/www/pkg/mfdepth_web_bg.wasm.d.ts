/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_maskdemo_free: (a: number, b: number) => void;
export const __wbg_maskresult_free: (a: number, b: number) => void;
export const __wbg_sweepdemo_free: (a: number, b: number) => void;
export const maskdemo_height: (a: number) => number;
export const maskdemo_masks: (a: number, b: number, c: number) => [number, number, number];
export const maskdemo_new: (a: number, b: number) => [number, number, number];
export const maskdemo_overfitPreview: (a: number) => [number, number, number, number];
export const maskdemo_width: (a: number) => number;
export const maskresult_mCo: (a: number) => number;
export const maskresult_mCon: (a: number) => number;
export const maskresult_mI: (a: number) => number;
export const maskresult_movers: (a: number) => number;
export const maskresult_precision: (a: number) => number;
export const maskresult_recall: (a: number) => number;
export const maskresult_rgba: (a: number) => [number, number];
export const overfitCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const sweepdemo_height: (a: number) => number;
export const sweepdemo_hintPreview: (a: number) => [number, number, number, number];
export const sweepdemo_image: (a: number) => [number, number];
export const sweepdemo_new: (a: number) => [number, number, number];
export const sweepdemo_profile: (a: number, b: number, c: number) => [number, number];
export const sweepdemo_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
