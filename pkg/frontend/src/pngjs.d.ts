declare module "pngjs" {
  interface PngOptions {
    width?: number;
    height?: number;
  }
  export class PNG {
    constructor(options?: PngOptions);
    width: number;
    height: number;
    data: Buffer;
    static sync: {
      write(png: PNG): Buffer;
      read(buffer: Buffer): PNG;
    };
  }
}
