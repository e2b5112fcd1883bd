/* tslint:disable */
/* eslint-disable */

/**
 * A simulated sequence together with its tracking result.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Detection boxes; the id slot is always -1.
     */
    detections(frame: number): Float64Array;
    constructor(seed: number, n_targets: number, n_frames: number, jitter: number, dropout: number, merge: boolean, no_imm: boolean, no_msdc: boolean, no_auf: boolean);
    /**
     * `[hota, assa, deta, idf1, mota, ids, fp, fn]`; MOTA is NaN without ground truth.
     */
    summary(): Float64Array;
    tracks(frame: number): Float64Array;
    truth(frame: number): Float64Array;
    readonly frames: number;
    readonly height: number;
    readonly width: number;
}

/**
 * Spatial weight of the fused cost at `samples` evenly spaced uncertainties
 * in `[0, u_max]`, as `u, alpha` pairs.
 */
export function alpha_curve(alpha_min: number, alpha_max: number, u_ref: number, u_max: number, samples: number): Float64Array;

/**
 * Centers of a target rolled forward `steps` frames under CV, CA and CT from the
 * same start (speed along +x, lateral acceleration `accel`, turn rate `omega`).
 * Layout: all CV points, then CA, then CT, each as `x, y` pairs including the start.
 */
export function model_rollout(speed: number, accel: number, omega: number, steps: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly alpha_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly demo_detections: (a: number, b: number) => [number, number];
    readonly demo_frames: (a: number) => number;
    readonly demo_height: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
    readonly demo_summary: (a: number) => [number, number];
    readonly demo_tracks: (a: number, b: number) => [number, number];
    readonly demo_truth: (a: number, b: number) => [number, number];
    readonly demo_width: (a: number) => number;
    readonly model_rollout: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
