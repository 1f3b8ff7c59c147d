import * as tf from '@tensorflow/tfjs';
import { createRequire } from 'node:module';

let ready: Promise<string> | null = null;

/** The wasm backend ships no gradient kernels for convolutions, so training
 *  runs on the pure-JS cpu backend; set GRIDSYNTH_TFJS_BACKEND=wasm to try
 *  the bundled wasm binary for inference-heavy runs. */
export function ensureBackend(): Promise<string> {
  if (ready === null) {
    ready = (async () => {
      if (process.env.GRIDSYNTH_TFJS_BACKEND === 'wasm') {
        try {
          const wasm = await import('@tensorflow/tfjs-backend-wasm');
          const require = createRequire(import.meta.url);
          const wasmFile = require.resolve('@tensorflow/tfjs-backend-wasm/dist/tfjs-backend-wasm.wasm');
          wasm.setWasmPaths(wasmFile.replace(/tfjs-backend-wasm\.wasm$/, ''));
          await tf.setBackend('wasm');
          await tf.ready();
          return tf.getBackend();
        } catch {
          // fall through to cpu
        }
      }
      await tf.setBackend('cpu');
      await tf.ready();
      return tf.getBackend();
    })();
  }
  return ready;
}
