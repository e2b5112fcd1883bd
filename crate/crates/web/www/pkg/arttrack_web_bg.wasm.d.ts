/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const alpha_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const demo_detections: (a: number, b: number) => [number, number];
export const demo_frames: (a: number) => number;
export const demo_height: (a: number) => number;
export const demo_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
export const demo_summary: (a: number) => [number, number];
export const demo_tracks: (a: number, b: number) => [number, number];
export const demo_truth: (a: number, b: number) => [number, number];
export const demo_width: (a: number) => number;
export const model_rollout: (a: number, b: number, c: number, d: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
